"""
Pytest configuration and shared fixtures.

Provides catalog technologies and small run configurations that are
deterministic (constant latency, fixed survival) so protocol invariants can
be asserted exactly.
"""

import math

import pytest

from memory.technologies import MemoryTechnology, get_technology
from simulation.settings import RunConfig


@pytest.fixture
def ca40() -> MemoryTechnology:
    """40Ca+ trapped ion (T1=1.14 s, T2=0.5 s)."""
    return get_technology("Ca40")


@pytest.fixture
def nv() -> MemoryTechnology:
    return get_technology("NV")


@pytest.fixture
def dephasing_only() -> MemoryTechnology:
    """Infinite T1, T2=0.5 s."""
    return MemoryTechnology(name="dephasing-only", t1_s=math.inf, t2_s=0.5)


@pytest.fixture
def make_config():
    """Factory for two-arm run configs with constant latency and fixed survival."""

    def _make(
        latency_s: float = 0.001,
        survival: float = 1.0,
        pair_count: int = 1000,
        rate_hz: float = 1.0e4,
        seed: int = 1234,
        **changes,
    ) -> RunConfig:
        config = RunConfig(seed=seed).with_changes({
            "latency.kind": "constant",
            "latency.value_s": latency_s,
            "simulation.survival_override": survival,
            "source.pair_count": pair_count,
            "source.rate_hz": rate_hz,
        })
        if changes:
            config = config.with_changes({key.replace("__", "."): value for key, value in changes.items()})
        return config

    return _make


@pytest.fixture
def output_dir(tmp_path, monkeypatch):
    """Temporary results directory used as PAIRVERIFY_OUTPUT_DIR."""
    out = tmp_path / "results"
    monkeypatch.setattr("simulation.reporting.OUTPUT_DIR", str(out))
    return out
