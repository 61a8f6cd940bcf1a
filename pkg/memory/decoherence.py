"""
Idle-memory decoherence of a stored pair.

Amplitude damping (sqrt(gamma1) sigma_minus) and pure dephasing
(sqrt(gamma_phi) sigma_z) act on every qubit sitting in memory. The
Hamiltonian is the identity, so the commutator term vanishes.

Density matrices are vectorized row-major: vec(A rho B) = kron(A, B.T) vec(rho).
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np
from scipy import optimize

from config import (
    BISECTION_RELATIVE_TOLERANCE,
    INTEGRATION_STEPS_PER_LIFETIME,
    MAX_INTEGRATION_STEPS,
    RICHARDSON_TOLERANCE,
)
from core.abstractions import FidelityEvaluator
from errors import IntegrationError, NumericalError, ThresholdDomainError
from memory.states import (
    IDENTITY_2,
    SIGMA_MINUS,
    SIGMA_Z,
    TwoQubitState,
    bell_singlet,
    check_state,
    fidelity,
    on_qubit,
)
from memory.technologies import DEFAULT_CONVENTION, DephasingConvention, MemoryTechnology
from network.latency import LatencyModel

logger = logging.getLogger(__name__)

IDENTITY_4 = np.kron(IDENTITY_2, IDENTITY_2)


@dataclass(frozen=True)
class ExposureIntervals:
    """
    How long each qubit of a pair idled in memory.

    The qubit stored first idles alone for |tau_a - tau_b|; after that both
    idle together for min(tau_a, tau_b).
    """
    tau_a_s: float
    tau_b_s: float

    def __post_init__(self):
        if self.tau_a_s < 0 or self.tau_b_s < 0:
            raise ValueError(f"Exposure times must be non-negative, got ({self.tau_a_s}, {self.tau_b_s})")

    @property
    def total(self) -> float:
        return self.tau_a_s + self.tau_b_s

    def segments(self) -> List[Tuple[float, Tuple[int, ...]]]:
        """Piecewise schedule as (duration, active qubits) in time order."""
        solo = abs(self.tau_a_s - self.tau_b_s)
        both = min(self.tau_a_s, self.tau_b_s)
        result = []
        if solo > 0:
            result.append((solo, (0,) if self.tau_a_s > self.tau_b_s else (1,)))
        if both > 0:
            result.append((both, (0, 1)))
        return result


def _dissipator(jump: np.ndarray) -> np.ndarray:
    """Superoperator of D(L) rho = L rho L^dag - 1/2 {L^dag L, rho}."""
    ldl = jump.conj().T @ jump
    return (
        np.kron(jump, jump.conj())
        - 0.5 * np.kron(ldl, IDENTITY_4)
        - 0.5 * np.kron(IDENTITY_4, ldl.T)
    )


def jump_operators(
    tech: MemoryTechnology,
    convention: DephasingConvention,
    active: Tuple[int, ...] = (0, 1),
) -> List[Tuple[str, int, np.ndarray]]:
    """Scaled jump operators (kind, qubit, operator) for the active qubits."""
    gamma1 = tech.gamma1
    gamma_phi = tech.gamma_phi(convention)
    operators = []
    for qubit in active:
        if gamma1 > 0:
            operators.append(("decay", qubit, math.sqrt(gamma1) * on_qubit(SIGMA_MINUS, qubit)))
        operators.append(("dephase", qubit, math.sqrt(gamma_phi) * on_qubit(SIGMA_Z, qubit)))
    return operators


def lindblad_generator(
    tech: MemoryTechnology,
    convention: DephasingConvention,
    active: Tuple[int, ...] = (0, 1),
) -> np.ndarray:
    """16x16 Liouvillian for the qubits currently in memory."""
    generator = np.zeros((16, 16), dtype=complex)
    for _, _, jump in jump_operators(tech, convention, active):
        generator += _dissipator(jump)
    return generator


def _rk4_propagator(generator: np.ndarray, h: float) -> np.ndarray:
    # Classic RK4 applied to a linear ODE collapses to this polynomial in h*L.
    a = h * generator
    a2 = a @ a
    a3 = a2 @ a
    return np.eye(16, dtype=complex) + a + a2 / 2.0 + a3 / 6.0 + (a3 @ a) / 24.0


def _integrate_segment(vec: np.ndarray, generator: np.ndarray, duration: float, dt_max: float) -> np.ndarray:
    steps = max(1, math.ceil(duration / dt_max))
    while True:
        if 2 * steps > MAX_INTEGRATION_STEPS:
            raise IntegrationError(
                f"Step size underflow: {duration:.3e} s needs more than {MAX_INTEGRATION_STEPS} steps "
                f"at dt_max={dt_max:.3e} s"
            )
        coarse = np.linalg.matrix_power(_rk4_propagator(generator, duration / steps), steps) @ vec
        fine = np.linalg.matrix_power(_rk4_propagator(generator, duration / (2 * steps)), 2 * steps) @ vec
        # Richardson estimate of the fine result's error for a 4th-order method
        error = float(np.max(np.abs(fine - coarse))) / 15.0
        if error <= RICHARDSON_TOLERANCE:
            return fine
        logger.debug(f"Richardson error {error:.3e} at {steps} steps, halving step")
        steps *= 2


def lindblad_propagate(
    state: TwoQubitState,
    schedule: ExposureIntervals,
    tech: MemoryTechnology,
    convention: DephasingConvention = DEFAULT_CONVENTION,
    dt_max: Optional[float] = None,
) -> TwoQubitState:
    """
    Integrate the master equation over an exposure schedule.

    Args:
        state: Initial pair state
        schedule: Per-qubit idle times
        tech: Memory technology (same at both nodes)
        convention: Dephasing-rate convention
        dt_max: Largest RK4 step; defaults to min(T1, T2) / 1000

    Returns:
        Propagated, validated and re-symmetrized state

    Raises:
        IntegrationError: On step-size underflow or a broken state invariant
    """
    if dt_max is None:
        dt_max = tech.shortest_lifetime / INTEGRATION_STEPS_PER_LIFETIME
    if not dt_max > 0:
        raise ValueError(f"dt_max must be positive, got {dt_max}")

    vec = state.rho.reshape(16)
    for duration, active in schedule.segments():
        vec = _integrate_segment(vec, lindblad_generator(tech, convention, active), duration, dt_max)

    rho = vec.reshape(4, 4)
    try:
        check_state(rho)
    except NumericalError as e:
        raise IntegrationError(f"Propagated state is unphysical: {e}") from e
    return TwoQubitState(0.5 * (rho + rho.conj().T))


def closed_form_fidelity(
    tau_a: float,
    tau_b: float,
    tech: MemoryTechnology,
    convention: DephasingConvention = DEFAULT_CONVENTION,
) -> float:
    """
    Singlet fidelity after independent idling of tau_a and tau_b.

    F = 1/4 (e^{-g1 tau_a} + e^{-g1 tau_b}) + 1/2 e^{-(g1/2 + 2 g_phi)(tau_a + tau_b)}
    """
    if tau_a < 0 or tau_b < 0:
        raise ValueError(f"Exposure times must be non-negative, got ({tau_a}, {tau_b})")
    gamma1 = tech.gamma1
    gamma_phi = tech.gamma_phi(convention)
    populations = 0.25 * (math.exp(-gamma1 * tau_a) + math.exp(-gamma1 * tau_b))
    coherence = 0.5 * math.exp(-(0.5 * gamma1 + 2.0 * gamma_phi) * (tau_a + tau_b))
    return populations + coherence


def fidelity_asymptote(tech: MemoryTechnology) -> float:
    """Long-time fidelity: 0 with amplitude damping, 1/2 for pure dephasing."""
    return 0.0 if tech.gamma1 > 0 else 0.5


def timeout_from_threshold(f_th: float, tech: MemoryTechnology) -> float:
    """
    Idle-time budget -T2 ln(2 f_th - 1) for a fidelity threshold.

    Raises:
        ThresholdDomainError: If f_th <= 0.5 (no finite timeout)
        ValueError: If f_th > 1 or is not a number
    """
    if math.isnan(f_th) or f_th > 1.0:
        raise ValueError(f"Fidelity threshold must be at most 1, got {f_th}")
    if f_th <= 0.5:
        raise ThresholdDomainError(f"Fidelity threshold {f_th} <= 0.5 gives an unbounded timeout")
    return max(0.0, -tech.t2_s * math.log(2.0 * f_th - 1.0))


@dataclass(frozen=True)
class LatencyBound:
    """
    Largest one-way classical latency keeping the verified pair above threshold.

    always_satisfiable is set when the threshold lies at or below the
    long-time asymptote, in which case seconds is infinite.
    """
    seconds: float
    always_satisfiable: bool = False


def verification_fidelity(
    latency_s: float,
    tech: MemoryTechnology,
    delta_tq: float,
    convention: DephasingConvention = DEFAULT_CONVENTION,
) -> float:
    """Fidelity at verification when the earlier qubit idles delta_tq longer."""
    return closed_form_fidelity(delta_tq + latency_s, latency_s, tech, convention)


def max_tolerable_latency(
    f_th: float,
    tech: MemoryTechnology,
    delta_tq: float = 0.0,
    convention: DephasingConvention = DEFAULT_CONVENTION,
) -> LatencyBound:
    """
    Largest T_C with verification fidelity >= f_th, by bisection.

    Raises:
        ValueError: If f_th is outside (0, 1] or delta_tq is negative
    """
    if math.isnan(f_th) or not 0.0 < f_th <= 1.0:
        raise ValueError(f"Fidelity threshold must lie in (0, 1], got {f_th}")
    if delta_tq < 0:
        raise ValueError(f"delta_tq must be non-negative, got {delta_tq}")

    if f_th <= fidelity_asymptote(tech):
        return LatencyBound(seconds=math.inf, always_satisfiable=True)

    def margin(latency_s: float) -> float:
        return verification_fidelity(latency_s, tech, delta_tq, convention) - f_th

    if margin(0.0) <= 0.0:
        return LatencyBound(seconds=0.0)

    upper = tech.t2_s
    for _ in range(2000):
        if margin(upper) < 0.0:
            break
        upper *= 2.0
    else:
        raise NumericalError(f"Could not bracket the latency bound for f_th={f_th}")

    root = optimize.bisect(margin, 0.0, upper, xtol=1e-300, rtol=BISECTION_RELATIVE_TOLERANCE, maxiter=2000)
    return LatencyBound(seconds=float(root))


def latency_coverage(
    f_th: float,
    tech: MemoryTechnology,
    model: LatencyModel,
    delta_tq: float = 0.0,
    convention: DephasingConvention = DEFAULT_CONVENTION,
) -> float:
    """Probability that a latency drawn from `model` stays within the tolerable bound."""
    bound = max_tolerable_latency(f_th, tech, delta_tq, convention)
    if bound.always_satisfiable:
        return 1.0
    return model.cdf(bound.seconds)


class ClosedFormEvaluator(FidelityEvaluator):
    """Analytic fidelity for a singlet under the idle-memory noise model."""

    name = "closed_form"

    def __init__(self, tech: MemoryTechnology, convention: DephasingConvention = DEFAULT_CONVENTION):
        self.tech = tech
        self.convention = convention

    def evaluate(self, exposure: ExposureIntervals) -> float:
        return closed_form_fidelity(exposure.tau_a_s, exposure.tau_b_s, self.tech, self.convention)


class LindbladEvaluator(FidelityEvaluator):
    """Numerical master-equation fidelity; results are cached per exposure."""

    name = "lindblad"

    def __init__(self, tech: MemoryTechnology, convention: DephasingConvention = DEFAULT_CONVENTION):
        self.tech = tech
        self.convention = convention
        self._evaluate_cached = lru_cache(maxsize=4096)(self._evaluate)

    def _evaluate(self, tau_a: float, tau_b: float) -> float:
        state = lindblad_propagate(bell_singlet(), ExposureIntervals(tau_a, tau_b), self.tech, self.convention)
        return fidelity(state)

    def evaluate(self, exposure: ExposureIntervals) -> float:
        return self._evaluate_cached(exposure.tau_a_s, exposure.tau_b_s)


def make_evaluator(
    kind: str,
    tech: MemoryTechnology,
    convention: DephasingConvention = DEFAULT_CONVENTION,
) -> FidelityEvaluator:
    """Build a fidelity evaluator by name ('closed_form' or 'lindblad')."""
    evaluators = {cls.name: cls for cls in (ClosedFormEvaluator, LindbladEvaluator)}
    if kind not in evaluators:
        raise ValueError(f"Unknown fidelity model '{kind}'; choose from {sorted(evaluators)}")
    return evaluators[kind](tech, convention)
