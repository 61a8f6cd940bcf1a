"""
Simulation package.

This package provides:
- Run configuration (YAML + pydantic) and shipped presets
- The discrete-event engine and its simpy event scheduler
- Run metrics, experiment drivers, the sweep runner and result files
"""

from .settings import RunConfig, load_config, load_preset
from .metrics import PairOutcome, RunReport
from .engine import Simulation, run, verification_exposure

__all__ = [
    'RunConfig',
    'load_config',
    'load_preset',
    'PairOutcome',
    'RunReport',
    'Simulation',
    'run',
    'verification_exposure',
]

__version__ = '1.0.0'
