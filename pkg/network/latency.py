"""
Classical control-channel latency.

Delays are symmetric by assumption. A LatencyModel is immutable; a
LatencyChannel owns the run's generator stream and applies the
per-direction policy.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Optional, Sequence, Set, Tuple, Union

import numpy as np
from scipy import stats

from config import DEFAULT_LATENCY_MEDIAN_S, DEFAULT_LATENCY_SIGMA
from errors import ConfigurationError

logger = logging.getLogger(__name__)


class LatencyKind(Enum):
    CONSTANT = "constant"
    LOGNORMAL = "lognormal"
    EMPIRICAL = "empirical"


class DirectionPolicy(Enum):
    """How delays are assigned to the two directions of an ID exchange."""

    IID = "iid"
    MAX_SHARED = "max_shared"


@dataclass(frozen=True)
class LatencyModel:
    """
    One-way delay distribution.

    Attributes:
        kind: Distribution family
        value_s: Constant delay (constant kind); zero is allowed as a degenerate test mode
        mu: Log-mean of the lognormal (ln of the median, seconds)
        sigma: Log-standard-deviation of the lognormal
        samples_s: Sorted empirical samples (empirical kind)
    """
    kind: LatencyKind
    value_s: float = 0.0
    mu: float = math.log(DEFAULT_LATENCY_MEDIAN_S)
    sigma: float = DEFAULT_LATENCY_SIGMA
    samples_s: Tuple[float, ...] = ()
    symmetric: bool = field(default=True, init=False)

    def __post_init__(self):
        if self.kind is LatencyKind.CONSTANT and (self.value_s < 0 or not math.isfinite(self.value_s)):
            raise ConfigurationError(f"Constant latency must be finite and non-negative, got {self.value_s}")
        if self.kind is LatencyKind.LOGNORMAL and self.sigma <= 0:
            raise ConfigurationError(f"Lognormal sigma must be positive, got {self.sigma}")
        if self.kind is LatencyKind.EMPIRICAL:
            if not self.samples_s:
                raise ConfigurationError("Empirical latency model needs at least one sample")
            if any(s <= 0 or not math.isfinite(s) for s in self.samples_s):
                raise ConfigurationError("Empirical latency samples must be positive and finite")
            object.__setattr__(self, "samples_s", tuple(sorted(self.samples_s)))

    @classmethod
    def constant(cls, value_s: float) -> "LatencyModel":
        return cls(kind=LatencyKind.CONSTANT, value_s=value_s)

    @classmethod
    def lognormal(cls, mu: float, sigma: float) -> "LatencyModel":
        return cls(kind=LatencyKind.LOGNORMAL, mu=mu, sigma=sigma)

    @classmethod
    def lognormal_from_median(cls, median_s: float, sigma: float = DEFAULT_LATENCY_SIGMA) -> "LatencyModel":
        if median_s <= 0:
            raise ConfigurationError(f"Lognormal median must be positive, got {median_s}")
        return cls.lognormal(math.log(median_s), sigma)

    @classmethod
    def empirical(cls, samples_s: Sequence[float]) -> "LatencyModel":
        return cls(kind=LatencyKind.EMPIRICAL, samples_s=tuple(float(s) for s in samples_s))

    def _quantile(self, u: np.ndarray) -> np.ndarray:
        # Inverse CDF over sorted samples with linear interpolation; never extrapolates.
        samples = np.asarray(self.samples_s)
        if samples.size == 1:
            return np.full_like(u, samples[0], dtype=float)
        grid = np.linspace(0.0, 1.0, samples.size)
        return np.interp(u, grid, samples)

    def draw(self, rng: np.random.Generator, size: Optional[int] = None) -> Union[float, np.ndarray]:
        """Draw one delay (or `size` delays) in seconds."""
        if self.kind is LatencyKind.CONSTANT:
            if size is None:
                return self.value_s
            return np.full(size, self.value_s)
        if self.kind is LatencyKind.LOGNORMAL:
            return rng.lognormal(mean=self.mu, sigma=self.sigma, size=size)
        u = rng.random(size)
        values = self._quantile(np.atleast_1d(u))
        return float(values[0]) if size is None else values

    def cdf(self, t: float) -> float:
        """P(delay <= t)."""
        if self.kind is LatencyKind.CONSTANT:
            return 1.0 if t >= self.value_s else 0.0
        if self.kind is LatencyKind.LOGNORMAL:
            return float(stats.lognorm.cdf(t, s=self.sigma, scale=math.exp(self.mu)))
        samples = np.asarray(self.samples_s)
        if t < samples[0]:
            return 0.0
        if samples.size == 1 or t >= samples[-1]:
            return 1.0
        grid = np.linspace(0.0, 1.0, samples.size)
        # Ties in the samples make the quantile flat; take the right-most grid point.
        idx = int(np.searchsorted(samples, t, side="right"))
        lo, hi = samples[idx - 1], samples[idx]
        return float(grid[idx - 1] + (grid[idx] - grid[idx - 1]) * (t - lo) / (hi - lo))

    def median(self) -> float:
        if self.kind is LatencyKind.CONSTANT:
            return self.value_s
        if self.kind is LatencyKind.LOGNORMAL:
            return math.exp(self.mu)
        return float(self._quantile(np.array([0.5]))[0])

    def describe(self) -> str:
        if self.kind is LatencyKind.CONSTANT:
            return f"constant({self.value_s:g} s)"
        if self.kind is LatencyKind.LOGNORMAL:
            return f"lognormal(median={math.exp(self.mu):g} s, sigma={self.sigma:g})"
        return f"empirical({len(self.samples_s)} samples, median={self.median():g} s)"


def draw_latency(model: LatencyModel, rng: np.random.Generator) -> float:
    """Draw a single one-way delay in seconds."""
    return float(model.draw(rng))


def load_latency_samples(path: Union[str, Path]) -> LatencyModel:
    """
    Load an empirical latency file.

    Format: one latency in milliseconds per line; blank lines and lines
    starting with '#' are ignored.

    Raises:
        OSError: If the file cannot be read
        ConfigurationError: If a line is not a positive number or no samples remain
    """
    path = Path(path)
    samples_ms = []
    with path.open("r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                value = float(line)
            except ValueError as e:
                raise ConfigurationError(f"{path}:{lineno}: not a number: {line!r}") from e
            if value <= 0 or not math.isfinite(value):
                raise ConfigurationError(f"{path}:{lineno}: latency must be positive, got {value}")
            samples_ms.append(value)

    if not samples_ms:
        raise ConfigurationError(f"No latency samples found in {path}")

    logger.info(f"Loaded {len(samples_ms)} latency samples from {path}")
    return LatencyModel.empirical([ms / 1000.0 for ms in samples_ms])


class LatencyChannel:
    """
    Assigns delays to control messages for one run.

    Under MAX_SHARED the first message in each direction for a given pair ID
    shares one delay drawn from the model. Further messages for the same ID
    in an already-used direction draw afresh.
    """

    def __init__(self, model: LatencyModel, policy: DirectionPolicy, rng: np.random.Generator):
        self.model = model
        self.policy = policy
        self._rng = rng
        self._shared: Dict[int, Tuple[float, Set[str], float]] = {}

    def delay_for(self, pair_id: int, sender: str, now: float = 0.0) -> float:
        """Delay for a message about pair_id sent by `sender`."""
        if self.policy is DirectionPolicy.IID:
            return draw_latency(self.model, self._rng)

        entry = self._shared.get(pair_id)
        if entry is None:
            delay = draw_latency(self.model, self._rng)
            self._shared[pair_id] = (delay, {sender}, now)
            return delay

        delay, senders, created = entry
        if sender in senders:
            return draw_latency(self.model, self._rng)
        senders.add(sender)
        if len(senders) >= 2:
            del self._shared[pair_id]
        return delay

    def prune(self, before: float) -> int:
        """Forget shared delays created before `before` (seconds)."""
        stale = [pair_id for pair_id, (_, _, created) in self._shared.items() if created < before]
        for pair_id in stale:
            del self._shared[pair_id]
        return len(stale)


def per_direction_policy(model: LatencyModel, mode: DirectionPolicy, rng: np.random.Generator) -> LatencyChannel:
    """Build the delay-assignment rule for a run."""
    return LatencyChannel(model, mode, rng)
