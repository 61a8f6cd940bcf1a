"""
Two-qubit density matrices in the basis |00>, |01>, |10>, |11> (qubit A first).

|1> is the excited level; sigma_minus maps |1> to |0>.
"""

import logging
from dataclasses import dataclass

import numpy as np

from config import (
    HERMITICITY_TOLERANCE,
    IMAGINARY_TOLERANCE,
    POSITIVITY_TOLERANCE,
    TRACE_TOLERANCE,
)
from errors import NumericalError

logger = logging.getLogger(__name__)

SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

SINGLET_VECTOR = np.array([0.0, 1.0, -1.0, 0.0], dtype=complex) / np.sqrt(2.0)


def on_qubit(op: np.ndarray, qubit: int) -> np.ndarray:
    """Embed a single-qubit operator on qubit 0 (A) or 1 (B)."""
    if qubit == 0:
        return np.kron(op, IDENTITY_2)
    if qubit == 1:
        return np.kron(IDENTITY_2, op)
    raise ValueError(f"qubit must be 0 or 1, got {qubit}")


@dataclass(frozen=True, eq=False)
class TwoQubitState:
    """A validated 4x4 density matrix."""
    rho: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        if rho.shape != (4, 4):
            raise ValueError(f"rho must be 4x4, got shape {rho.shape}")
        rho = rho.copy()
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    def validate(self, trace_tolerance: float = TRACE_TOLERANCE) -> "TwoQubitState":
        """
        Check Hermiticity, unit trace and positivity.

        Raises:
            NumericalError: If any check fails
        """
        check_state(self.rho, trace_tolerance)
        return self

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.rho)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.rho + self.rho.conj().T)).min())


def check_state(rho: np.ndarray, trace_tolerance: float = TRACE_TOLERANCE) -> None:
    """Raise NumericalError unless rho is a physical density matrix."""
    herm_err = float(np.max(np.abs(rho - rho.conj().T)))
    if herm_err > HERMITICITY_TOLERANCE:
        raise NumericalError(f"State is not Hermitian (max deviation {herm_err:.3e})")

    trace_err = abs(np.trace(rho) - 1.0)
    if trace_err > trace_tolerance:
        raise NumericalError(f"State trace deviates from 1 by {trace_err:.3e}")

    min_eig = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min())
    if min_eig < POSITIVITY_TOLERANCE:
        raise NumericalError(f"State is not positive semidefinite (min eigenvalue {min_eig:.3e})")


def bell_singlet() -> TwoQubitState:
    """|Psi-><Psi-| with |Psi-> = (|01> - |10>)/sqrt(2)."""
    return TwoQubitState(np.outer(SINGLET_VECTOR, SINGLET_VECTOR.conj()))


def maximally_mixed() -> TwoQubitState:
    return TwoQubitState(np.eye(4, dtype=complex) / 4.0)


def product_state(index: int) -> TwoQubitState:
    """Computational basis projector |index><index| (index = 2a + b)."""
    rho = np.zeros((4, 4), dtype=complex)
    rho[index, index] = 1.0
    return TwoQubitState(rho)


def fidelity(state: TwoQubitState) -> float:
    """
    Singlet fidelity <Psi-|rho|Psi->.

    Raises:
        NumericalError: If the overlap has an imaginary part above tolerance
    """
    overlap = SINGLET_VECTOR.conj() @ state.rho @ SINGLET_VECTOR
    if abs(overlap.imag) > IMAGINARY_TOLERANCE:
        raise NumericalError(f"Fidelity has imaginary residue {overlap.imag:.3e}")
    return float(min(1.0, max(0.0, overlap.real)))
