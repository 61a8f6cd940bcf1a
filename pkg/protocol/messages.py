"""
Control messages exchanged between entangling nodes, and the per-qubit records
each node keeps.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple


class MessageKind(Enum):
    ANNOUNCE = "announce"
    DISCARD_NOTIFY = "discard_notify"
    GAP_DISCARD = "gap_discard"


DISCARD_KINDS = (MessageKind.DISCARD_NOTIFY, MessageKind.GAP_DISCARD)

# Field order of the message trace export
MESSAGE_TRACE_FIELDS = ("kind", "id", "sender", "sent_at", "delivered_at")


@dataclass(frozen=True)
class ControlMessage:
    """
    A classical message about one entanglement ID (or a batch of gap IDs).

    For an announce, sent_at is also the sender's storage time.
    """
    kind: MessageKind
    id: int
    sender: str
    sent_at: float
    ids: Tuple[int, ...] = ()

    @property
    def pair_ids(self) -> Tuple[int, ...]:
        return self.ids or (self.id,)

    def trace_row(self, delivered_at: Optional[float] = None) -> dict:
        return {
            "kind": self.kind.value,
            "id": self.id,
            "sender": self.sender,
            "sent_at": self.sent_at,
            "delivered_at": delivered_at,
        }


class RecordStatus(Enum):
    AWAITING_PARTNER = "awaiting_partner"
    VERIFIED = "verified"
    CONSUMED = "consumed"
    DISCARDED_TIMEOUT = "discarded_timeout"
    DISCARDED_GAP = "discarded_gap"
    DISCARDED_NOTIFIED = "discarded_notified"
    DISCARDED_OVERFLOW = "discarded_overflow"

    @property
    def holds_slot(self) -> bool:
        return self in (RecordStatus.AWAITING_PARTNER, RecordStatus.VERIFIED)

    @property
    def is_discard(self) -> bool:
        return self.value.startswith("discarded_")


_ALLOWED_TRANSITIONS = {
    RecordStatus.AWAITING_PARTNER: {
        RecordStatus.VERIFIED,
        RecordStatus.DISCARDED_TIMEOUT,
        RecordStatus.DISCARDED_GAP,
        RecordStatus.DISCARDED_NOTIFIED,
        RecordStatus.DISCARDED_OVERFLOW,
    },
    RecordStatus.VERIFIED: {RecordStatus.CONSUMED},
}


@dataclass
class QubitRecord:
    """
    A node's entry for one entanglement ID.

    slot is None for IDs resolved without ever occupying memory
    (tombstoned arrivals and drop-newest overflow).
    """
    id: int
    stored_at: float
    deadline: float
    status: RecordStatus
    slot: Optional[int] = None
    resolved_at: Optional[float] = None

    def can_move_to(self, status: RecordStatus) -> bool:
        return status in _ALLOWED_TRANSITIONS.get(self.status, set())


@dataclass
class NodeUpdate:
    """Everything a single protocol transition produced."""
    messages: List[ControlMessage] = field(default_factory=list)
    verified: List[int] = field(default_factory=list)
    resolved: List[Tuple[int, RecordStatus]] = field(default_factory=list)
    # Times at which guarded sequence gaps become final
    gap_checks: List[float] = field(default_factory=list)
