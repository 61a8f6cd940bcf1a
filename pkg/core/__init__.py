"""Core abstractions shared across packages."""

from .abstractions import FidelityEvaluator

__all__ = ['FidelityEvaluator']
