"""
Tests for the experiment drivers and their trends.

Covers:
- Fidelity-vs-latency curves per technology
- Buffer occupancy vs constant latency
- Verified rate and timeout vs fidelity threshold
"""

import math

import pytest

from memory.technologies import get_technology
from simulation.experiments import (
    BUFFER_SWEEP_COLUMNS,
    FIDELITY_CURVE_COLUMNS,
    RATE_SWEEP_COLUMNS,
    buffer_sweep,
    fidelity_curve,
    fidelity_curve_from_config,
    fidelity_curves,
    is_non_decreasing,
    is_non_increasing,
    rate_vs_timeout,
)
from simulation.settings import load_preset


class TestFidelityCurves:
    """Fidelity vs idle time."""

    def test_starts_at_one(self):
        """t=0 gives F=1 for every technology."""
        frame = fidelity_curves(None, [0.0, 0.1])
        assert (frame[frame["t_s"] == 0.0]["fidelity"] == 1.0).all()

    def test_ordering_by_t2(self):
        """Technologies appear in decreasing T2 order."""
        frame = fidelity_curves(None, [0.0, 0.5, 1.0])
        order = list(dict.fromkeys(frame["technology"]))
        t2s = [get_technology(name).t2_s for name in order]
        assert t2s == sorted(t2s, reverse=True)
        assert list(frame.columns) == FIDELITY_CURVE_COLUMNS

    def test_ca40_below_nv(self):
        """Same T2, shorter T1: Ca40 lies below NV for t > 0."""
        grid = [0.05, 0.1, 0.5, 1.0]
        ca40 = dict(fidelity_curve(get_technology("Ca40"), t_grid=grid))
        nv = dict(fidelity_curve(get_technology("NV"), t_grid=grid))
        assert all(ca40[t] < nv[t] for t in grid)

    def test_curve_decreasing(self):
        """Each curve is non-increasing in t."""
        frame = fidelity_curves(None, [i * 0.01 for i in range(101)])
        for _, curve in frame.groupby("technology"):
            assert is_non_increasing(list(curve["fidelity"]), tolerance=1e-15)

    def test_bad_grid(self, ca40):
        """Unsorted or negative grids are rejected."""
        with pytest.raises(ValueError):
            fidelity_curve(ca40, t_grid=[0.2, 0.1])
        with pytest.raises(ValueError):
            fidelity_curve(ca40, t_grid=[-0.1, 0.0])

    def test_from_config(self):
        """The preset's grid and threshold are used."""
        frame = fidelity_curve_from_config(load_preset("desk-scale"))
        assert len(frame) == 6 * 101
        assert (frame["threshold"] == 0.81).all()


class TestBufferSweep:
    """Occupancy vs latency."""

    def test_occupancy_non_decreasing(self, make_config):
        """Longer latency keeps qubits longer, by about the arrival rate times the extra latency."""
        config = make_config(survival=0.1, pair_count=20_000, seed=4)
        frame = buffer_sweep(config, latencies_s=[0.0, 0.005, 0.010, 0.020])

        assert list(frame.columns) == BUFFER_SWEEP_COLUMNS
        occupancy = list(frame["mean_occupancy"])
        assert is_non_decreasing(occupancy)
        assert occupancy[0] == pytest.approx(0.0, abs=1e-9)
        # stored-qubit rate per node is 1e4 * 0.1
        assert occupancy[3] - occupancy[2] == pytest.approx(1.0e3 * 0.010, rel=0.1)

    def test_skew_bound_at_zero_latency(self, make_config):
        """At zero latency occupancy stays below rate times skew."""
        skew = 1e-3
        config = make_config(pair_count=2000, simulation__skew_override_s=skew)
        frame = buffer_sweep(config, latencies_s=[0.0, 0.001])
        assert frame["mean_occupancy_a"].iloc[0] <= 1.0e4 * skew + 1e-9

    def test_preset_pairs(self):
        """Each configured pair is swept over every latency."""
        config = load_preset("desk-scale").with_changes({"source.duration_s": 0.1})
        frame = buffer_sweep(config, latencies_s=[0.0, 0.01])
        assert list(frame["pair"]) == ["C-E", "C-E", "B-D", "B-D"]
        for _, rows in frame.groupby("pair"):
            assert is_non_decreasing(list(rows["mean_occupancy"]))

    def test_needs_two_points(self, make_config):
        """A single latency is not a sweep."""
        with pytest.raises(ValueError):
            buffer_sweep(make_config(), latencies_s=[0.01])


class TestRateSweep:
    """Verified rate vs threshold."""

    def test_constant_latency_rows(self, make_config):
        """Rows whose timeout is shorter than the latency verify nothing."""
        config = make_config(latency_s=0.1, pair_count=500)
        frame = rate_vs_timeout(config, thresholds=[0.95, 0.6, 0.81])

        assert list(frame.columns) == RATE_SWEEP_COLUMNS
        assert list(frame["fidelity_threshold"]) == [0.6, 0.81, 0.95]
        row_081 = frame[frame["fidelity_threshold"] == 0.81].iloc[0]
        assert row_081["timeout_s"] == pytest.approx(0.23902, abs=1e-5)
        assert list(frame["verified"]) == [500, 500, 0]
        assert list(frame["latency_coverage"]) == [1.0, 1.0, 0.0]
        assert is_non_increasing(list(frame["verified_rate_hz"]))

    def test_timeout_override_ignored(self, make_config):
        """The sweep always derives the timeout from the threshold."""
        config = make_config(pair_count=50, protocol__timeout_s=5.0)
        frame = rate_vs_timeout(config, thresholds=[0.9])
        assert frame["timeout_s"].iloc[0] == pytest.approx(-0.5 * math.log(0.8))

    def test_desk_preset_trend(self):
        """On the desk preset the verified rate falls as the threshold rises."""
        config = load_preset("desk-scale").with_changes({"source.duration_s": 0.3})
        frame = rate_vs_timeout(config)
        assert is_non_increasing(list(frame["verified_rate_hz"]))
        assert is_non_increasing(list(frame["timeout_s"]))
        assert frame["verified"].iloc[0] > 0


class TestTrendHelpers:
    """Monotonicity checks."""

    def test_helpers(self):
        """Ties count as monotone; tolerance absorbs small dips."""
        assert is_non_decreasing([1, 1, 2])
        assert not is_non_decreasing([1, 0.9])
        assert is_non_decreasing([1, 0.95], tolerance=0.1)
        assert is_non_increasing([3, 3, 1])
        assert not is_non_increasing([1, 2])
