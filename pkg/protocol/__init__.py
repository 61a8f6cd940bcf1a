"""
Verification protocol package.

This package provides:
- Classical control messages and qubit records
- The per-node verification state machine
"""

from .messages import ControlMessage, MessageKind, NodeUpdate, QubitRecord, RecordStatus
from .node import ProtocolNode

__all__ = [
    'ControlMessage',
    'MessageKind',
    'NodeUpdate',
    'QubitRecord',
    'RecordStatus',
    'ProtocolNode',
]

__version__ = '1.0.0'
