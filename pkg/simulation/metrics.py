"""
Per-run statistics: buffer occupancy, pair outcomes, fidelity at consumption.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np

from config import DEFAULT_HISTOGRAM_BIN_WIDTH
from errors import AccountingError

logger = logging.getLogger(__name__)


class PairOutcome(Enum):
    """Final class of an emitted pair, in precedence order."""

    LOST = "lost"
    VERIFIED = "verified"
    OVERFLOW = "overflow"
    ONE_SIDED = "one_sided"
    TIMED_OUT = "timed_out"
    IN_FLIGHT = "in_flight"


class OccupancyTracker:
    """
    Time-weighted buffer occupancy over the window [0, horizon_s].

    Changes after the horizon still update the peak but not the mean.
    """

    def __init__(self, horizon_s: float):
        if horizon_s <= 0:
            raise ValueError(f"horizon_s must be positive, got {horizon_s}")
        self.horizon_s = horizon_s
        self._area = 0.0
        self._last_t = 0.0
        self._current = 0
        self.peak = 0

    def update(self, now: float, occupancy: int) -> None:
        t = min(now, self.horizon_s)
        if t > self._last_t:
            self._area += self._current * (t - self._last_t)
            self._last_t = t
        self._current = occupancy
        self.peak = max(self.peak, occupancy)

    @property
    def current(self) -> int:
        return self._current

    def mean(self) -> float:
        area = self._area + self._current * (self.horizon_s - self._last_t)
        return area / self.horizon_s


def histogram_bin_count(bin_width: float) -> int:
    """
    Number of equal-width bins covering [0, 1].

    Raises:
        ValueError: If the width is outside (0, 1] or does not split [0, 1] into whole bins
    """
    if not 0.0 < bin_width <= 1.0:
        raise ValueError(f"histogram bin width must lie in (0, 1], got {bin_width}")
    n_bins = round(1.0 / bin_width)
    if not math.isclose(n_bins * bin_width, 1.0, rel_tol=1e-9):
        raise ValueError(f"histogram bin width {bin_width} does not divide [0, 1] into equal bins")
    return n_bins


@dataclass
class FidelityStats:
    count: int = 0
    mean: Optional[float] = None
    minimum: Optional[float] = None
    maximum: Optional[float] = None
    bin_width: float = DEFAULT_HISTOGRAM_BIN_WIDTH
    histogram: List[int] = field(default_factory=list)

    @classmethod
    def from_values(cls, values: List[float], bin_width: float = DEFAULT_HISTOGRAM_BIN_WIDTH) -> "FidelityStats":
        n_bins = histogram_bin_count(bin_width)
        if not values:
            return cls(bin_width=bin_width, histogram=[0] * n_bins)
        arr = np.asarray(values, dtype=float)
        counts, _ = np.histogram(np.clip(arr, 0.0, 1.0), bins=n_bins, range=(0.0, 1.0))
        return cls(
            count=int(arr.size),
            mean=float(arr.mean()),
            minimum=float(arr.min()),
            maximum=float(arr.max()),
            bin_width=bin_width,
            histogram=[int(c) for c in counts],
        )


@dataclass
class NodeStats:
    mean_occupancy: float
    max_occupancy: int
    photon_loss_rate: float
    late_messages: int
    overflow_dropped: int
    discards: Dict[str, int] = field(default_factory=dict)


@dataclass
class RunReport:
    """
    Everything measured in one run.

    Rates divide by the emission window duration_s.
    """
    seed: int
    run_index: int
    pair_label: str
    node_a: str
    node_b: str
    technology: str
    convention: str
    source_rate_hz: float
    duration_s: float
    timeout_s: float
    delta_tq_s: float
    survival_a: float
    survival_b: float
    emitted: int
    outcomes: Dict[str, int]
    consumed: Dict[str, int]
    messages: Dict[str, int]
    fidelity: FidelityStats
    nodes: Dict[str, NodeStats]
    agreement_ok: bool
    events_processed: int
    config_echo: Dict[str, Any] = field(default_factory=dict)

    @property
    def verified(self) -> int:
        return self.outcomes.get(PairOutcome.VERIFIED.value, 0)

    @property
    def verified_rate_hz(self) -> float:
        return self.verified / self.duration_s

    @property
    def discards_by_cause(self) -> Dict[str, int]:
        totals: Dict[str, int] = {}
        for stats in self.nodes.values():
            for cause, count in stats.discards.items():
                totals[cause] = totals.get(cause, 0) + count
        return totals

    def mean_occupancy(self, node_id: str) -> float:
        return self.nodes[node_id].mean_occupancy

    def check_conservation(self) -> None:
        """
        Raises:
            AccountingError: If emitted pairs are not fully accounted for
        """
        accounted = sum(self.outcomes.get(outcome.value, 0) for outcome in PairOutcome)
        if accounted != self.emitted:
            raise AccountingError(
                f"Conservation violated: emitted {self.emitted} != accounted {accounted} ({self.outcomes})"
            )
        settled = not self.outcomes.get(PairOutcome.IN_FLIGHT.value) and not self.outcomes.get(PairOutcome.OVERFLOW.value)
        for node_id, count in self.consumed.items():
            if settled and self.agreement_ok and count != self.verified:
                raise AccountingError(
                    f"Node {node_id} consumed {count} pairs but {self.verified} pairs verified at both nodes"
                )

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["verified"] = self.verified
        data["verified_rate_hz"] = self.verified_rate_hz
        data["discards_by_cause"] = self.discards_by_cause
        return data

    def to_row(self) -> Dict[str, Any]:
        """Flat summary for tabular output."""
        row: Dict[str, Any] = {
            "pair": self.pair_label,
            "seed": self.seed,
            "technology": self.technology,
            "timeout_s": self.timeout_s,
            "delta_tq_s": self.delta_tq_s,
            "emitted": self.emitted,
        }
        for outcome in PairOutcome:
            row[outcome.value] = self.outcomes.get(outcome.value, 0)
        row["verified_rate_hz"] = self.verified_rate_hz
        row["fidelity_mean"] = self.fidelity.mean if self.fidelity.mean is not None else math.nan
        row["fidelity_min"] = self.fidelity.minimum if self.fidelity.minimum is not None else math.nan
        for node_id in (self.node_a, self.node_b):
            row[f"mean_occupancy_{node_id}"] = self.nodes[node_id].mean_occupancy
            row[f"max_occupancy_{node_id}"] = self.nodes[node_id].max_occupancy
        return row
