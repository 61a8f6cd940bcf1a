"""
Exception hierarchy for the simulator.

Each category maps to a command-line exit code (see cli.py). Input-argument
checks inside the numerical helpers raise plain ValueError.
"""


class SimulationError(Exception):
    """Base class for all simulator errors."""

    exit_code = 1
    category = "internal"


class ConfigurationError(SimulationError, ValueError):
    """Invalid or inconsistent configuration."""

    exit_code = 2
    category = "config"


class TopologyError(ConfigurationError):
    """Disconnected path, missing node, or malformed network description."""


class ThresholdDomainError(ConfigurationError):
    """Fidelity threshold outside the domain where a finite timeout exists."""


class NumericalError(SimulationError, ArithmeticError):
    """Numerical failure (tolerance breach, non-physical state)."""

    exit_code = 3
    category = "numerical"


class IntegrationError(NumericalError):
    """Master-equation integration failed to converge or broke a state invariant."""


class ProtocolError(SimulationError, RuntimeError):
    """Protocol state machine received an event it cannot accept."""


class AccountingError(ProtocolError):
    """Run accounting identity does not hold."""
