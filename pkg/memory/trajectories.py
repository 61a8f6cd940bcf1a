"""
Monte Carlo wave-function unraveling of the idle-memory master equation.

Used as an independent check on the analytic and integrated fidelities.
Every jump operator here makes sum(L^dag L) diagonal in the computational
basis, so no-jump evolution has a closed form and jump times are found by
root-finding on the decaying norm.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy import optimize

from config import TRAJECTORY_BATCH_SIZE
from memory.decoherence import ExposureIntervals, jump_operators
from memory.states import SINGLET_VECTOR
from memory.technologies import DEFAULT_CONVENTION, DephasingConvention, MemoryTechnology

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrajectoryEstimate:
    """
    Ensemble result of the trajectory oracle.

    Attributes:
        fidelity: Mean per-trajectory singlet fidelity
        std_error: Standard error of that mean
        zero_jump_fraction: Share of trajectories with no jump at all
        zero_jump_std_error: Binomial standard error of zero_jump_fraction
        n_traj: Trajectories run
    """
    fidelity: float
    std_error: float
    zero_jump_fraction: float
    zero_jump_std_error: float
    n_traj: int

    def within(self, reference: float, n_sigma: float = 3.0) -> bool:
        return abs(self.fidelity - reference) <= n_sigma * self.std_error


class _Segment:
    """Precomputed no-jump decay rates and jump operators for one schedule segment."""

    def __init__(self, duration: float, operators: List[np.ndarray]):
        self.duration = duration
        self.operators = operators
        rates = np.zeros(4)
        for op in operators:
            rates += np.real(np.diag(op.conj().T @ op))
        self.rates = rates

    def norm_squared(self, psi: np.ndarray, t: float) -> float:
        return float(np.sum(np.abs(psi) ** 2 * np.exp(-self.rates * t)))

    def evolve(self, psi: np.ndarray, t: float) -> np.ndarray:
        out = psi * np.exp(-0.5 * self.rates * t)
        return out / np.linalg.norm(out)


def _run_trajectory(segments: List[_Segment], rng: np.random.Generator) -> Tuple[float, int]:
    psi = SINGLET_VECTOR.copy()
    jumps = 0
    for segment in segments:
        remaining = segment.duration
        while remaining > 0:
            threshold = rng.random()
            if segment.norm_squared(psi, remaining) > threshold:
                psi = segment.evolve(psi, remaining)
                break

            jump_at = optimize.brentq(
                lambda t: segment.norm_squared(psi, t) - threshold, 0.0, remaining, xtol=1e-15
            )
            psi = segment.evolve(psi, jump_at)
            candidates = [op @ psi for op in segment.operators]
            weights = np.array([np.real(np.vdot(c, c)) for c in candidates])
            choice = rng.choice(len(candidates), p=weights / weights.sum())
            psi = candidates[choice] / math.sqrt(weights[choice])
            jumps += 1
            remaining -= jump_at

    overlap = np.vdot(SINGLET_VECTOR, psi)
    # drop floating-point residue so pure outcomes read as exactly 0 or 1
    return float(np.round(np.abs(overlap) ** 2, 12)), jumps


def trajectory_fidelity_oracle(
    schedule: ExposureIntervals,
    tech: MemoryTechnology,
    convention: DephasingConvention = DEFAULT_CONVENTION,
    n_traj: int = 10_000,
    seed: int = 0,
) -> TrajectoryEstimate:
    """
    Estimate the singlet fidelity by averaging quantum-jump trajectories.

    Batches of trajectories draw from independent child streams spawned from
    the seed, so results do not depend on batch scheduling.

    Args:
        schedule: Per-qubit idle times
        tech: Memory technology
        convention: Dephasing-rate convention
        n_traj: Number of trajectories (>= 1)
        seed: Master seed

    Returns:
        TrajectoryEstimate with fidelity, zero-jump fraction and standard errors
    """
    if n_traj < 1:
        raise ValueError(f"n_traj must be at least 1, got {n_traj}")

    if schedule.total == 0:
        return TrajectoryEstimate(1.0, 0.0, 1.0, 0.0, n_traj)

    segments = [
        _Segment(duration, [op for _, _, op in jump_operators(tech, convention, active)])
        for duration, active in schedule.segments()
    ]

    fidelities = np.empty(n_traj)
    jump_counts = np.empty(n_traj, dtype=np.int64)
    n_batches = math.ceil(n_traj / TRAJECTORY_BATCH_SIZE)
    children = np.random.SeedSequence(seed).spawn(n_batches)
    for batch, child in enumerate(children):
        rng = np.random.default_rng(child)
        start = batch * TRAJECTORY_BATCH_SIZE
        for i in range(start, min(start + TRAJECTORY_BATCH_SIZE, n_traj)):
            fidelities[i], jump_counts[i] = _run_trajectory(segments, rng)

    zero_jump = float(np.mean(jump_counts == 0))
    if n_traj > 1:
        std_error = float(np.std(fidelities, ddof=1) / math.sqrt(n_traj))
        zero_jump_error = math.sqrt(zero_jump * (1.0 - zero_jump) / n_traj)
    else:
        std_error = zero_jump_error = 0.0

    estimate = TrajectoryEstimate(
        fidelity=float(np.mean(fidelities)),
        std_error=std_error,
        zero_jump_fraction=zero_jump,
        zero_jump_std_error=zero_jump_error,
        n_traj=n_traj,
    )
    logger.debug(
        f"Trajectory oracle {tech.name} tau=({schedule.tau_a_s:g}, {schedule.tau_b_s:g}): "
        f"F={estimate.fidelity:.5f} +/- {estimate.std_error:.5f}, zero-jump {estimate.zero_jump_fraction:.5f}"
    )
    return estimate
