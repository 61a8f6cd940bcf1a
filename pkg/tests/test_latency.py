"""
Tests for the classical latency models and the per-direction delay policy.
"""

import math
from pathlib import Path

import numpy as np
import pytest

from errors import ConfigurationError
from network.latency import (
    DirectionPolicy,
    LatencyChannel,
    LatencyKind,
    LatencyModel,
    draw_latency,
    load_latency_samples,
    per_direction_policy,
)

SAMPLES_FILE = Path(__file__).resolve().parent.parent / "data" / "latency_samples_example.txt"


class TestLatencyModel:
    """Sampling, CDF and median of each distribution family."""

    def test_constant_always_same(self):
        """A 10 ms constant model never varies."""
        model = LatencyModel.constant(0.010)
        rng = np.random.default_rng(0)
        assert all(draw_latency(model, rng) == 0.010 for _ in range(100))
        assert model.cdf(0.0099) == 0.0
        assert model.cdf(0.010) == 1.0

    def test_zero_constant_allowed(self):
        """Zero latency is a valid degenerate mode."""
        assert LatencyModel.constant(0.0).median() == 0.0

    def test_negative_constant_rejected(self):
        """Negative delays are configuration errors."""
        with pytest.raises(ConfigurationError):
            LatencyModel.constant(-0.001)

    def test_empirical_singleton(self):
        """A single sample is returned every time."""
        model = LatencyModel.empirical([0.0123])
        rng = np.random.default_rng(1)
        assert set(float(x) for x in model.draw(rng, size=50)) == {0.0123}

    def test_empirical_never_extrapolates(self):
        """Draws stay within the sample range."""
        model = LatencyModel.empirical([0.005, 0.010, 0.020])
        draws = model.draw(np.random.default_rng(2), size=10_000)
        assert draws.min() >= 0.005
        assert draws.max() <= 0.020

    def test_empirical_file_median(self):
        """The shipped sample file has a 10 ms median and 1e5 draws reproduce it within 2%."""
        model = load_latency_samples(SAMPLES_FILE)
        assert model.kind is LatencyKind.EMPIRICAL
        draws = model.draw(np.random.default_rng(20240101), size=100_000)
        assert float(np.median(draws)) == pytest.approx(0.010, rel=0.02)

    def test_empirical_cdf_monotone(self):
        """The interpolated CDF is non-decreasing and spans [0, 1]."""
        model = LatencyModel.empirical([0.004, 0.008, 0.008, 0.016])
        grid = np.linspace(0.0, 0.02, 201)
        values = [model.cdf(t) for t in grid]
        assert values[0] == 0.0
        assert values[-1] == 1.0
        assert all(b >= a for a, b in zip(values, values[1:]))

    def test_lognormal_median_and_cdf(self):
        """Median parameterization puts half the mass below the median."""
        model = LatencyModel.lognormal_from_median(0.010, 0.35)
        assert model.median() == pytest.approx(0.010)
        assert model.cdf(0.010) == pytest.approx(0.5)

    def test_lognormal_sample_median(self):
        """Seeded lognormal draws have the configured median."""
        model = LatencyModel.lognormal(math.log(0.010), 0.35)
        draws = model.draw(np.random.default_rng(3), size=100_000)
        assert float(np.median(draws)) == pytest.approx(0.010, rel=0.01)

    def test_lognormal_bad_sigma(self):
        """Sigma must be positive."""
        with pytest.raises(ConfigurationError):
            LatencyModel.lognormal(0.0, 0.0)

    def test_describe(self):
        """Descriptions name the family."""
        assert LatencyModel.constant(0.001).describe().startswith("constant")
        assert "median" in LatencyModel.lognormal_from_median(0.01).describe()


class TestSampleFileLoader:
    """Parsing of millisecond sample files."""

    def test_comments_and_blank_lines(self, tmp_path):
        """Comments and blank lines are skipped; values are converted to seconds."""
        path = tmp_path / "samples.txt"
        path.write_text("# header\n\n12.5\n  7.5 \n")
        model = load_latency_samples(path)
        assert model.samples_s == (0.0075, 0.0125)

    def test_non_numeric_line(self, tmp_path):
        """A malformed line names the file and line number."""
        path = tmp_path / "bad.txt"
        path.write_text("10\nabc\n")
        with pytest.raises(ConfigurationError, match="bad.txt:2"):
            load_latency_samples(path)

    def test_empty_file(self, tmp_path):
        """A file with no samples is rejected."""
        path = tmp_path / "empty.txt"
        path.write_text("# nothing here\n")
        with pytest.raises(ConfigurationError):
            load_latency_samples(path)

    def test_missing_file(self, tmp_path):
        """A missing file raises OSError."""
        with pytest.raises(OSError):
            load_latency_samples(tmp_path / "absent.txt")


class TestLatencyChannel:
    """Per-direction delay assignment."""

    def test_max_shared_symmetric(self):
        """Both directions of one exchange get the identical delay."""
        channel = LatencyChannel(LatencyModel.lognormal_from_median(0.01), DirectionPolicy.MAX_SHARED,
                                 np.random.default_rng(4))
        for pair_id in range(100):
            there = channel.delay_for(pair_id, "A")
            back = channel.delay_for(pair_id, "B")
            assert there == back
        assert channel.prune(before=math.inf) == 0

    def test_max_shared_is_one_draw(self):
        """The shared delay is a single draw from the same stream."""
        model = LatencyModel.lognormal_from_median(0.01)
        channel = LatencyChannel(model, DirectionPolicy.MAX_SHARED, np.random.default_rng(5))
        reference = np.random.default_rng(5)
        assert channel.delay_for(0, "A") == draw_latency(model, reference)

    def test_max_shared_keeps_model_distribution(self):
        """Shared delays follow the configured model, so its CDF describes them."""
        model = LatencyModel.lognormal_from_median(0.01, sigma=0.35)
        channel = LatencyChannel(model, DirectionPolicy.MAX_SHARED, np.random.default_rng(12))
        delays = []
        for pair_id in range(20_000):
            delays.append(channel.delay_for(pair_id, "A"))
            channel.delay_for(pair_id, "B")
        median = float(np.median(delays))
        assert median == pytest.approx(0.01, rel=0.02)
        assert model.cdf(median) == pytest.approx(0.5, abs=0.02)

    def test_iid_reproducible_and_distinct(self):
        """IID delays differ per message but repeat under the same seed."""
        model = LatencyModel.lognormal_from_median(0.01)

        def delays(seed):
            channel = per_direction_policy(model, DirectionPolicy.IID, np.random.default_rng(seed))
            return [channel.delay_for(k, sender) for k in range(20) for sender in ("A", "B")]

        first = delays(6)
        assert first == delays(6)
        assert len(set(first)) == len(first)

    def test_constant_modes_coincide(self):
        """With a constant model both policies give the same delays."""
        model = LatencyModel.constant(0.002)
        shared = LatencyChannel(model, DirectionPolicy.MAX_SHARED, np.random.default_rng(7))
        iid = LatencyChannel(model, DirectionPolicy.IID, np.random.default_rng(7))
        for k in range(10):
            assert shared.delay_for(k, "A") == iid.delay_for(k, "A") == 0.002

    def test_repeat_sender_draws_fresh(self):
        """A second message in the same direction does not consume the shared delay."""
        channel = LatencyChannel(LatencyModel.lognormal_from_median(0.01), DirectionPolicy.MAX_SHARED,
                                 np.random.default_rng(8))
        first = channel.delay_for(3, "A")
        channel.delay_for(3, "A")
        assert channel.delay_for(3, "B") == first

    def test_prune(self):
        """Old one-sided entries are forgotten."""
        channel = LatencyChannel(LatencyModel.constant(0.001), DirectionPolicy.MAX_SHARED,
                                 np.random.default_rng(9))
        channel.delay_for(1, "A", now=0.0)
        channel.delay_for(2, "A", now=5.0)
        assert channel.prune(before=1.0) == 1
        assert channel.prune(before=10.0) == 1
