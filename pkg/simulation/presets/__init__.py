"""Shipped run configurations (YAML)."""
