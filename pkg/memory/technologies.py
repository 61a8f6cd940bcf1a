"""
Quantum memory technologies and the dephasing-rate convention.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional

from errors import ConfigurationError

logger = logging.getLogger(__name__)


class DephasingConvention(Enum):
    """
    How T2 maps to the per-qubit dephasing rate gamma_phi.

    PAPER_LITERAL: gamma_phi = 1/T2 (singlet coherence decays as exp(-4t/T2)).
    EQ1_CALIBRATED: gamma_phi = 1/(4 T2) (singlet coherence decays as exp(-t/T2),
    consistent with the timeout formula).
    """

    PAPER_LITERAL = "paper_literal"
    EQ1_CALIBRATED = "eq1_calibrated"


DEFAULT_CONVENTION = DephasingConvention.EQ1_CALIBRATED


@dataclass(frozen=True)
class MemoryTechnology:
    """
    A memory platform, identical at every node.

    Attributes:
        name: Catalog key or custom label
        t1_s: Longitudinal relaxation time; math.inf disables amplitude damping
        t2_s: Transverse relaxation time
        label: Human-readable platform name
    """
    name: str
    t1_s: float
    t2_s: float
    label: str = ""

    def __post_init__(self):
        if not self.t1_s > 0:
            raise ConfigurationError(f"Technology '{self.name}': t1_s must be positive, got {self.t1_s}")
        if not (self.t2_s > 0 and math.isfinite(self.t2_s)):
            raise ConfigurationError(f"Technology '{self.name}': t2_s must be positive and finite, got {self.t2_s}")

    @property
    def gamma1(self) -> float:
        """Amplitude-damping rate 1/T1 (zero when T1 is infinite)."""
        return 0.0 if math.isinf(self.t1_s) else 1.0 / self.t1_s

    def gamma_phi(self, convention: DephasingConvention = DEFAULT_CONVENTION) -> float:
        """Per-qubit dephasing rate under the given convention."""
        if convention is DephasingConvention.PAPER_LITERAL:
            return 1.0 / self.t2_s
        return 1.0 / (4.0 * self.t2_s)

    @property
    def shortest_lifetime(self) -> float:
        return min(self.t1_s, self.t2_s)


TECHNOLOGY_CATALOG: Dict[str, MemoryTechnology] = {
    tech.name: tech
    for tech in (
        MemoryTechnology("Yb171", 12000.0, 4200.0, "171Yb+ trapped ion"),
        MemoryTechnology("Er167", 600.0, 1.3, "167Er3+ rare-earth ion"),
        MemoryTechnology("Ca40", 1.14, 0.5, "40Ca+ trapped ion"),
        MemoryTechnology("NV", 200.0, 0.5, "NV centre in diamond"),
        MemoryTechnology("SC-cavity-A", 0.0256, 0.034, "superconducting cavity A"),
        MemoryTechnology("SC-cavity-B", 0.0012, 0.00072, "superconducting cavity B"),
    )
}


def get_technology(name: str) -> MemoryTechnology:
    """
    Look up a catalog technology by name (case-insensitive).

    Raises:
        ConfigurationError: If the name is not in the catalog
    """
    for key, tech in TECHNOLOGY_CATALOG.items():
        if key.lower() == name.lower():
            return tech
    raise ConfigurationError(
        f"Unknown memory technology '{name}'; known: {', '.join(TECHNOLOGY_CATALOG)}"
    )


def custom_technology(name: str, t1_s: Optional[float], t2_s: float) -> MemoryTechnology:
    """Technology from user values; t1_s=None means infinite T1."""
    return MemoryTechnology(name=name, t1_s=math.inf if t1_s is None else float(t1_s), t2_s=float(t2_s), label=name)


def list_technologies() -> List[MemoryTechnology]:
    """Catalog entries ordered by decreasing T2."""
    return sorted(TECHNOLOGY_CATALOG.values(), key=lambda tech: tech.t2_s, reverse=True)
