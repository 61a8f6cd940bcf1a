"""
Network package: quantum-channel topology and classical-channel latency.
"""

from .topology import NodeKind, NodeSpec, FiberLink, QuantumPath, Topology, survival_probability
from .latency import DirectionPolicy, LatencyChannel, LatencyModel, load_latency_samples

__all__ = [
    'NodeKind',
    'NodeSpec',
    'FiberLink',
    'QuantumPath',
    'Topology',
    'survival_probability',
    'DirectionPolicy',
    'LatencyChannel',
    'LatencyModel',
    'load_latency_samples',
]

__version__ = '1.0.0'
