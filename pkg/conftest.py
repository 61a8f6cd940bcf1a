import os
import sys

# Root modules (config, errors, buffer_manager, cli) are imported by bare name.
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

os.environ.setdefault("LOG_LEVEL", "WARNING")

import pytest


pytest_plugins = ("pytest_asyncio",)


def pytest_configure(config):
    os.environ.setdefault("PAIRVERIFY_OUTPUT_DIR", "tests/output")
    config.addinivalue_line("markers", "slow: slow test")
