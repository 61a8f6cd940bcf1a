"""
Core abstractions for the simulator.

This module defines the abstract base class for pair-fidelity evaluators, so
the engine can switch between the analytic model and numerical master-equation
propagation without changing the event loop.
"""

from abc import ABC, abstractmethod
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from memory.decoherence import ExposureIntervals


class FidelityEvaluator(ABC):
    """
    Abstract base class for computing the fidelity of a consumed pair.
    """

    name: str = "abstract"

    @abstractmethod
    def evaluate(self, exposure: "ExposureIntervals") -> float:
        """
        Evaluate the singlet fidelity of a pair after idling in memory.

        Args:
            exposure: How long each qubit of the pair idled.

        Returns:
            The fidelity, in [0, 1].
        """
        pass
