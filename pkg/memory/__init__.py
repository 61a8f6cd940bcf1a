"""
Quantum memory package.

This package provides:
- Memory technology catalog and dephasing-rate conventions
- Two-qubit density matrices and singlet fidelity
- Idle-memory decoherence (master-equation propagation, closed form, timeouts)
- A quantum-trajectory fidelity oracle
"""

from .technologies import (
    DephasingConvention,
    MemoryTechnology,
    TECHNOLOGY_CATALOG,
    get_technology,
)
from .states import TwoQubitState, bell_singlet, fidelity
from .decoherence import (
    ExposureIntervals,
    LatencyBound,
    closed_form_fidelity,
    lindblad_propagate,
    max_tolerable_latency,
    timeout_from_threshold,
)
from .trajectories import TrajectoryEstimate, trajectory_fidelity_oracle

__all__ = [
    'DephasingConvention',
    'MemoryTechnology',
    'TECHNOLOGY_CATALOG',
    'get_technology',
    'TwoQubitState',
    'bell_singlet',
    'fidelity',
    'ExposureIntervals',
    'LatencyBound',
    'closed_form_fidelity',
    'lindblad_propagate',
    'max_tolerable_latency',
    'timeout_from_threshold',
    'TrajectoryEstimate',
    'trajectory_fidelity_oracle',
]

__version__ = '1.0.0'
