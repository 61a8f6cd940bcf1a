"""
Tests for run statistics and the accounting identity.
"""

import pytest

from errors import AccountingError
from simulation.metrics import FidelityStats, NodeStats, OccupancyTracker, PairOutcome, RunReport, histogram_bin_count


def make_report(outcomes, consumed=None, agreement_ok=True):
    full = {outcome.value: 0 for outcome in PairOutcome}
    full.update(outcomes)
    node_stats = NodeStats(
        mean_occupancy=1.5, max_occupancy=3, photon_loss_rate=0.0,
        late_messages=0, overflow_dropped=0, discards={"discarded_timeout": 2},
    )
    return RunReport(
        seed=1, run_index=0, pair_label="A-B", node_a="A", node_b="B",
        technology="Ca40", convention="eq1_calibrated", source_rate_hz=100.0, duration_s=2.0,
        timeout_s=0.239, delta_tq_s=0.0, survival_a=1.0, survival_b=1.0,
        emitted=sum(full.values()), outcomes=full,
        consumed=consumed if consumed is not None else {"A": full["verified"], "B": full["verified"]},
        messages={}, fidelity=FidelityStats.from_values([0.9, 0.95]),
        nodes={"A": node_stats, "B": node_stats}, agreement_ok=agreement_ok, events_processed=0,
    )


class TestOccupancyTracker:
    """Time-weighted occupancy."""

    def test_step_profile(self):
        """One qubit for the first half, two for the second half: mean 1.5."""
        tracker = OccupancyTracker(horizon_s=2.0)
        tracker.update(0.0, 1)
        tracker.update(1.0, 2)
        assert tracker.mean() == pytest.approx(1.5)
        assert tracker.peak == 2
        assert tracker.current == 2

    def test_changes_after_horizon(self):
        """Changes after the window affect the peak only."""
        tracker = OccupancyTracker(horizon_s=1.0)
        tracker.update(0.5, 2)
        tracker.update(1.5, 5)
        assert tracker.mean() == pytest.approx(1.0)
        assert tracker.peak == 5

    def test_invalid_horizon(self):
        """The window must have positive length."""
        with pytest.raises(ValueError):
            OccupancyTracker(0.0)


class TestFidelityStats:
    """Fidelity summary and histogram."""

    def test_empty(self):
        """No verified pairs leaves the summary empty."""
        stats = FidelityStats.from_values([], bin_width=0.1)
        assert stats.count == 0
        assert stats.mean is None
        assert stats.histogram == [0] * 10

    def test_values(self):
        """Counts, extremes and bins."""
        stats = FidelityStats.from_values([0.85, 0.95, 1.0], bin_width=0.1)
        assert stats.count == 3
        assert stats.mean == pytest.approx(0.9333333333)
        assert stats.minimum == 0.85
        assert stats.maximum == 1.0
        assert sum(stats.histogram) == 3
        assert stats.histogram[-1] == 2

    @pytest.mark.parametrize("bin_width, bins", [(0.1, 10), (0.01, 100), (0.25, 4), (1.0, 1)])
    def test_bin_count(self, bin_width, bins):
        """Widths that divide [0, 1] give exact bin counts."""
        assert histogram_bin_count(bin_width) == bins
        assert len(FidelityStats.from_values([0.5], bin_width=bin_width).histogram) == bins

    @pytest.mark.parametrize("bin_width", [0.3, 0.15, 0.0, 1.5])
    def test_uneven_width_rejected(self, bin_width):
        """A width that leaves a partial bin is an argument error."""
        with pytest.raises(ValueError):
            FidelityStats.from_values([0.9], bin_width=bin_width)


class TestRunReport:
    """Derived values and conservation."""

    def test_rates_and_causes(self):
        """Verified rate divides by the emission window."""
        report = make_report({"verified": 10, "lost": 5})
        assert report.verified == 10
        assert report.verified_rate_hz == pytest.approx(5.0)
        assert report.discards_by_cause == {"discarded_timeout": 4}
        assert report.mean_occupancy("A") == 1.5

    def test_conservation_holds(self):
        """Balanced outcomes pass."""
        make_report({"verified": 10, "lost": 5, "timed_out": 1}).check_conservation()

    def test_conservation_violated(self):
        """Outcomes not summing to emitted pairs raise AccountingError."""
        report = make_report({"verified": 10})
        report.emitted = 11
        with pytest.raises(AccountingError):
            report.check_conservation()

    def test_consumed_mismatch(self):
        """A node consuming more than the verified count is an accounting error."""
        report = make_report({"verified": 10}, consumed={"A": 10, "B": 11})
        with pytest.raises(AccountingError):
            report.check_conservation()

    def test_consumed_not_checked_with_overflow(self):
        """One-sided consumption from eviction is tolerated."""
        make_report({"verified": 10, "overflow": 1}, consumed={"A": 11, "B": 10}).check_conservation()

    def test_row_and_dict(self):
        """Flat row carries every outcome and per-node occupancy."""
        report = make_report({"verified": 3})
        row = report.to_row()
        for outcome in PairOutcome:
            assert outcome.value in row
        assert row["mean_occupancy_A"] == 1.5
        assert row["fidelity_mean"] == pytest.approx(0.925)
        data = report.to_dict()
        assert data["verified"] == 3
        assert data["fidelity"]["count"] == 2
