import heapq
import logging
from collections import OrderedDict
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, List, Optional

from config import DEFAULT_BUFFER_CAPACITY
from errors import ProtocolError

logger = logging.getLogger(__name__)


class OverflowPolicy(Enum):
    """What happens when a photon arrives at a full memory"""
    DROP_NEWEST = "drop_newest"
    DROP_OLDEST_UNVERIFIED = "drop_oldest_unverified"


@dataclass
class SlotEntry:
    """Data class for one occupied memory slot"""
    pair_id: int
    slot: int
    stored_at: float


class MemoryBuffer:
    """Manages the memory slots of a single entangling node"""

    def __init__(
        self,
        node_id: str,
        capacity: int = DEFAULT_BUFFER_CAPACITY,
        on_change: Optional[Callable[[float, int], None]] = None,
    ):
        if capacity < 1:
            raise ValueError(f"Buffer capacity must be at least 1, got {capacity}")
        self.node_id = node_id
        self.capacity = capacity
        self.on_change = on_change
        self.entries: "OrderedDict[int, SlotEntry]" = OrderedDict()
        self._free_slots: List[int] = []
        self._next_fresh_slot = 0

    @property
    def occupancy(self) -> int:
        return len(self.entries)

    def is_full(self) -> bool:
        return len(self.entries) >= self.capacity

    def _take_slot(self) -> int:
        # Lowest free index first keeps slot assignment deterministic
        if self._free_slots:
            return heapq.heappop(self._free_slots)
        slot = self._next_fresh_slot
        self._next_fresh_slot += 1
        return slot

    def allocate(self, pair_id: int, now: float) -> Optional[SlotEntry]:
        """Store a qubit; returns None when the buffer is full"""
        if pair_id in self.entries:
            raise ProtocolError(f"Node {self.node_id}: pair {pair_id} already occupies a slot")
        if self.is_full():
            logger.debug(f"Buffer full at node {self.node_id} (capacity {self.capacity}), pair {pair_id}")
            return None

        entry = SlotEntry(pair_id=pair_id, slot=self._take_slot(), stored_at=now)
        self.entries[pair_id] = entry
        self._notify(now)
        return entry

    def release(self, pair_id: int, now: float) -> SlotEntry:
        """Free the slot held by pair_id"""
        entry = self.entries.pop(pair_id, None)
        if entry is None:
            raise ProtocolError(f"Node {self.node_id}: pair {pair_id} holds no slot")
        heapq.heappush(self._free_slots, entry.slot)
        self._notify(now)
        return entry

    def oldest(self, predicate: Callable[[int], bool] = lambda _: True) -> Optional[SlotEntry]:
        """Earliest-stored entry whose pair id satisfies predicate"""
        for entry in self.entries.values():
            if predicate(entry.pair_id):
                return entry
        return None

    def _notify(self, now: float) -> None:
        if self.on_change is not None:
            self.on_change(now, len(self.entries))


class BufferManager:
    """Coordinates the memory buffers of all nodes in a run"""

    def __init__(self, capacity: int = DEFAULT_BUFFER_CAPACITY):
        self.capacity = capacity
        self.node_buffers: Dict[str, MemoryBuffer] = {}

    def get_node_buffer(
        self,
        node_id: str,
        on_change: Optional[Callable[[float, int], None]] = None,
    ) -> MemoryBuffer:
        """Get or create the buffer for a node"""
        if node_id not in self.node_buffers:
            self.node_buffers[node_id] = MemoryBuffer(node_id, self.capacity, on_change)
            logger.debug(f"Created buffer for node {node_id} with {self.capacity} slots")
        return self.node_buffers[node_id]
