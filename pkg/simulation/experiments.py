"""
Experiment drivers: fidelity-vs-latency curves, buffer occupancy vs latency,
and verified-pair rate vs fidelity threshold.

Each returns a pandas DataFrame with a fixed column order (see *_COLUMNS).
"""

import logging
from typing import Iterable, List, Optional, Sequence, Tuple

import pandas as pd

from config import QKD_FIDELITY_THRESHOLD
from memory.decoherence import (
    closed_form_fidelity,
    latency_coverage,
    max_tolerable_latency,
    timeout_from_threshold,
)
from memory.technologies import (
    DEFAULT_CONVENTION,
    DephasingConvention,
    MemoryTechnology,
    get_technology,
    list_technologies,
)
from network.topology import arm_skew
from simulation.settings import RunConfig
from simulation.sweep import run_sweep_sync

logger = logging.getLogger(__name__)

FIDELITY_CURVE_COLUMNS = ["technology", "t1_s", "t2_s", "t_s", "fidelity", "threshold"]
BUFFER_SWEEP_COLUMNS = [
    "latency_s", "pair", "survival_a", "survival_b", "mean_occupancy",
    "mean_occupancy_a", "mean_occupancy_b", "max_occupancy", "verified", "verified_rate_hz",
]
RATE_SWEEP_COLUMNS = [
    "fidelity_threshold", "timeout_s", "max_tolerable_latency_s", "always_satisfiable",
    "latency_coverage", "verified", "verified_rate_hz", "fidelity_mean",
]


def fidelity_curve(
    tech: MemoryTechnology,
    convention: DephasingConvention = DEFAULT_CONVENTION,
    t_grid: Iterable[float] = (),
) -> List[Tuple[float, float]]:
    """(t, F) with both qubits idling for t."""
    t_grid = list(t_grid)
    if any(t < 0 for t in t_grid):
        raise ValueError("t_grid must be non-negative")
    if t_grid != sorted(t_grid):
        raise ValueError("t_grid must be sorted")
    return [(t, closed_form_fidelity(t, t, tech, convention)) for t in t_grid]


def fidelity_curves(
    technologies: Optional[Sequence[MemoryTechnology]],
    t_grid: Sequence[float],
    convention: DephasingConvention = DEFAULT_CONVENTION,
    threshold: float = QKD_FIDELITY_THRESHOLD,
) -> pd.DataFrame:
    """Fidelity curves for several technologies, ordered by decreasing T2."""
    if technologies is None:
        technologies = list_technologies()
    rows = []
    for tech in sorted(technologies, key=lambda t: t.t2_s, reverse=True):
        for t, f in fidelity_curve(tech, convention, t_grid):
            rows.append({
                "technology": tech.name, "t1_s": tech.t1_s, "t2_s": tech.t2_s,
                "t_s": t, "fidelity": f, "threshold": threshold,
            })
    return pd.DataFrame(rows, columns=FIDELITY_CURVE_COLUMNS)


def fidelity_curve_from_config(config: RunConfig) -> pd.DataFrame:
    settings = config.experiments.fidelity_curve
    techs = None
    if settings.technologies is not None:
        techs = [get_technology(name) for name in settings.technologies]
    return fidelity_curves(techs, settings.grid(), config.memory.convention, config.protocol.fidelity_threshold)


def _constant_latency(config: RunConfig, latency_s: float) -> RunConfig:
    return config.with_changes({"latency.kind": "constant", "latency.value_s": latency_s})


def buffer_sweep(
    config: RunConfig,
    latencies_s: Optional[Sequence[float]] = None,
    pairs: Optional[Sequence[str]] = None,
    max_workers: int = 1,
) -> pd.DataFrame:
    """
    Mean and peak buffer occupancy per node pair at each constant latency.

    All points of one pair share a run index, so they see the same photon losses.
    """
    settings = config.experiments.buffer_sweep
    latencies_s = list(latencies_s if latencies_s is not None else settings.latencies_s)
    if len(latencies_s) < 2:
        raise ValueError("buffer sweep needs at least two latency values")
    pairs = list(pairs or settings.pairs or [config.topology.pair_under_test])
    config = config.resolve_seed()

    configs, run_indices, keys = [], [], []
    for pair_index, label in enumerate(pairs):
        for latency in latencies_s:
            configs.append(_constant_latency(config, latency).with_changes({"topology.pair_under_test": label}))
            run_indices.append(pair_index)
            keys.append((latency, label))

    reports = run_sweep_sync(configs, max_workers=max_workers, run_indices=run_indices)

    rows = []
    for (latency, label), report in zip(keys, reports):
        mean_a = report.mean_occupancy(report.node_a)
        mean_b = report.mean_occupancy(report.node_b)
        rows.append({
            "latency_s": latency,
            "pair": label,
            "survival_a": report.survival_a,
            "survival_b": report.survival_b,
            "mean_occupancy": 0.5 * (mean_a + mean_b),
            "mean_occupancy_a": mean_a,
            "mean_occupancy_b": mean_b,
            "max_occupancy": max(stats.max_occupancy for stats in report.nodes.values()),
            "verified": report.verified,
            "verified_rate_hz": report.verified_rate_hz,
        })
    return pd.DataFrame(rows, columns=BUFFER_SWEEP_COLUMNS)


def rate_vs_timeout(
    config: RunConfig,
    thresholds: Optional[Sequence[float]] = None,
    max_workers: int = 1,
) -> pd.DataFrame:
    """
    Timeout, tolerable latency and verified rate for each fidelity threshold.

    Timeouts always follow the threshold here, so any timeout override in the
    template is dropped.
    """
    thresholds = sorted(thresholds if thresholds is not None else config.experiments.rate_sweep.thresholds)
    config = config.resolve_seed().with_changes({"protocol.timeout_s": None})
    tech = config.technology()
    convention = config.memory.convention
    latency_model = config.latency.build()

    topology = config.topology.build()
    path_a, path_b = topology.arms(config.topology.pair_under_test)
    delta_tq = arm_skew(path_a, path_b, topology.signal_speed_km_per_s)
    if config.simulation.skew_override_s is not None:
        delta_tq = config.simulation.skew_override_s

    configs = [config.with_changes({"protocol.fidelity_threshold": f_th}) for f_th in thresholds]
    reports = run_sweep_sync(configs, max_workers=max_workers, run_indices=[0] * len(configs))

    rows = []
    for f_th, report in zip(thresholds, reports):
        bound = max_tolerable_latency(f_th, tech, delta_tq, convention)
        rows.append({
            "fidelity_threshold": f_th,
            "timeout_s": timeout_from_threshold(f_th, tech),
            "max_tolerable_latency_s": bound.seconds,
            "always_satisfiable": bound.always_satisfiable,
            "latency_coverage": latency_coverage(f_th, tech, latency_model, delta_tq, convention),
            "verified": report.verified,
            "verified_rate_hz": report.verified_rate_hz,
            "fidelity_mean": report.fidelity.mean,
        })
    return pd.DataFrame(rows, columns=RATE_SWEEP_COLUMNS)


def is_non_decreasing(values: Sequence[float], tolerance: float = 0.0) -> bool:
    return all(b >= a - tolerance for a, b in zip(values, values[1:]))


def is_non_increasing(values: Sequence[float], tolerance: float = 0.0) -> bool:
    return all(b <= a + tolerance for a, b in zip(values, values[1:]))
