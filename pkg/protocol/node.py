"""
Per-node verification state machine.

A node stores a qubit when its photon arrives, announces the entanglement ID
to its partner, and keeps the qubit only if the partner announces the same
ID in time. Missing IDs (known from lossless classical headers or inferred
from sequence gaps) are reported to the partner so its copy is freed.

All methods take the current simulation time in seconds and return a
NodeUpdate; the node never schedules anything itself.
"""

import logging
from collections import Counter
from typing import Dict, Optional, Set, Tuple

from buffer_manager import MemoryBuffer, OverflowPolicy
from config import LATE_MESSAGE_WARNING_THRESHOLD
from errors import ProtocolError
from protocol.messages import (
    DISCARD_KINDS,
    ControlMessage,
    MessageKind,
    NodeUpdate,
    QubitRecord,
    RecordStatus,
)

logger = logging.getLogger(__name__)


class ProtocolNode:
    """
    Protocol state of one entangling node.

    Args:
        node_id: This node's id
        timeout_s: Idle-time budget applied to every stored qubit
        buffer: Slot allocator for this node's memory
        overflow_policy: Behavior when a photon arrives at a full buffer
        gap_guard_s: How long a sequence gap waits for a late photon before it is reported
        batch_gap_discards: Report a run of inferred gaps in one message
        prune_horizon_s: Age after which resolved bookkeeping is forgotten
    """

    def __init__(
        self,
        node_id: str,
        timeout_s: float,
        buffer: MemoryBuffer,
        overflow_policy: OverflowPolicy = OverflowPolicy.DROP_NEWEST,
        gap_guard_s: float = 0.0,
        batch_gap_discards: bool = False,
        prune_horizon_s: Optional[float] = None,
    ):
        if timeout_s < 0:
            raise ValueError(f"timeout_s must be non-negative, got {timeout_s}")
        self.node_id = node_id
        self.timeout_s = timeout_s
        self.buffer = buffer
        self.overflow_policy = overflow_policy
        self.gap_guard_s = gap_guard_s
        self.batch_gap_discards = batch_gap_discards
        self.prune_horizon_s = prune_horizon_s if prune_horizon_s is not None else 10.0 * timeout_s

        self.records: Dict[int, QubitRecord] = {}
        self.pending_announcements: Dict[int, Tuple[ControlMessage, float]] = {}
        self.tombstones: Dict[int, Tuple[RecordStatus, float]] = {}
        self.missing: Dict[int, float] = {}
        self.inferred: Set[int] = set()
        self.guarded_gaps: Dict[int, float] = {}
        self.highest_id_seen = -1
        self.counters: Counter = Counter()
        self._late_warning_issued = False

    # ------------------------------------------------------------------ helpers

    def _message(self, kind: MessageKind, pair_id: int, sent_at: float, ids: Tuple[int, ...] = ()) -> ControlMessage:
        self.counters[f"sent_{kind.value}"] += 1
        return ControlMessage(kind=kind, id=pair_id, sender=self.node_id, sent_at=sent_at, ids=ids)

    def _resolve(self, record: QubitRecord, status: RecordStatus, now: float, update: NodeUpdate) -> None:
        if not record.can_move_to(status):
            raise ProtocolError(
                f"Node {self.node_id}: illegal transition {record.status.value} -> {status.value} for pair {record.id}"
            )
        if record.status.holds_slot and not status.holds_slot and record.slot is not None:
            self.buffer.release(record.id, now)
        record.status = status
        record.resolved_at = now
        self.counters[status.value] += 1
        update.resolved.append((record.id, status))
        logger.debug(f"Node {self.node_id} pair {record.id} -> {status.value} at {now:.9f}")

    def _closed_record(self, pair_id: int, status: RecordStatus, now: float, update: NodeUpdate) -> None:
        # Resolved on arrival without occupying memory
        record = QubitRecord(
            id=pair_id, stored_at=now, deadline=now + self.timeout_s,
            status=status, slot=None, resolved_at=now,
        )
        self.records[pair_id] = record
        self.counters[status.value] += 1
        update.resolved.append((pair_id, status))

    def _late(self, msg: ControlMessage) -> None:
        self.counters["late_messages"] += 1
        logger.debug(f"Node {self.node_id} ignoring late {msg.kind.value} for pair {msg.id}")
        if not self._late_warning_issued and self.counters["late_messages"] >= LATE_MESSAGE_WARNING_THRESHOLD:
            self._late_warning_issued = True
            logger.warning(
                f"Node {self.node_id} has ignored {self.counters['late_messages']} late control messages"
            )

    def _observe_id(self, pair_id: int, now: float, update: NodeUpdate) -> None:
        """Advance highest_id_seen; skipped IDs are held for the guard interval before they count as gaps."""
        gaps = [
            k for k in range(self.highest_id_seen + 1, pair_id)
            if k not in self.records and k not in self.missing and k not in self.guarded_gaps
        ]
        self.highest_id_seen = max(self.highest_id_seen, pair_id)
        if not gaps:
            return

        commit_at = now + self.gap_guard_s
        for k in gaps:
            self.guarded_gaps[k] = commit_at
        if self.gap_guard_s > 0:
            update.gap_checks.append(commit_at)
        else:
            self._commit_gaps(now, update)

    def _commit_gaps(self, now: float, update: NodeUpdate) -> None:
        """Report every guarded gap whose guard interval has run out."""
        due = sorted(k for k, commit_at in self.guarded_gaps.items() if commit_at <= now)
        for k in due:
            del self.guarded_gaps[k]
            self.missing[k] = now
            self.inferred.add(k)
            self.pending_announcements.pop(k, None)
            self.tombstones.pop(k, None)
        self.counters["gaps_inferred"] += len(due)

        if due and self.batch_gap_discards:
            update.messages.append(self._message(MessageKind.GAP_DISCARD, due[0], now, tuple(due)))
        else:
            update.messages.extend(self._message(MessageKind.GAP_DISCARD, k, now) for k in due)

    def _match(self, record: QubitRecord, msg: ControlMessage, received_at: float, now: float, update: NodeUpdate) -> None:
        """
        Verify a stored qubit against the partner's announce.

        Our announce left at record.stored_at and is assumed to travel with the
        latency we observed; it must reach the partner before the partner's
        deadline (msg.sent_at + timeout), or the partner will have discarded.
        """
        observed_latency = received_at - msg.sent_at
        partner_deadline = msg.sent_at + self.timeout_s
        if now < record.deadline and record.stored_at + observed_latency < partner_deadline:
            self._resolve(record, RecordStatus.VERIFIED, now, update)
            update.verified.append(record.id)
            # Verified pairs are consumed immediately
            self._resolve(record, RecordStatus.CONSUMED, now, update)
        else:
            self._resolve(record, RecordStatus.DISCARDED_TIMEOUT, now, update)
            update.messages.append(self._message(MessageKind.DISCARD_NOTIFY, record.id, now))

    def _handle_overflow(self, pair_id: int, now: float, update: NodeUpdate) -> bool:
        """Make room for pair_id; returns False when the arrival itself is dropped."""
        if self.overflow_policy is OverflowPolicy.DROP_OLDEST_UNVERIFIED:
            victim = self.buffer.oldest(
                lambda pid: self.records[pid].status is RecordStatus.AWAITING_PARTNER
            )
            if victim is not None:
                logger.warning(
                    f"Node {self.node_id} buffer full: evicting pair {victim.pair_id} for pair {pair_id}"
                )
                self._resolve(self.records[victim.pair_id], RecordStatus.DISCARDED_OVERFLOW, now, update)
                update.messages.append(self._message(MessageKind.DISCARD_NOTIFY, victim.pair_id, now))
                return True

        logger.warning(f"Node {self.node_id} buffer full: dropping arriving pair {pair_id}")
        self.counters["overflow_dropped"] += 1
        self._closed_record(pair_id, RecordStatus.DISCARDED_OVERFLOW, now, update)
        self.pending_announcements.pop(pair_id, None)
        update.messages.append(self._message(MessageKind.GAP_DISCARD, pair_id, now))
        return False

    # --------------------------------------------------------------- operations

    def on_photon_stored(self, pair_id: int, now: float) -> NodeUpdate:
        """
        Handle a photon (with its header) reaching this node's memory.

        Returns:
            NodeUpdate with the announce and any gap discards, plus the
            verification if the partner's announce was already waiting

        Raises:
            ProtocolError: If pair_id was already seen at this node
        """
        if pair_id in self.inferred:
            # Gap already reported to the partner
            self.inferred.discard(pair_id)
            del self.missing[pair_id]
            update = NodeUpdate()
            self.counters["headers_seen"] += 1
            self.counters["late_arrivals"] += 1
            self._closed_record(pair_id, RecordStatus.DISCARDED_GAP, now, update)
            return update
        if pair_id in self.records or pair_id in self.missing:
            raise ProtocolError(f"Node {self.node_id}: duplicate arrival for pair {pair_id}")

        update = NodeUpdate()
        if self.guarded_gaps.pop(pair_id, None) is not None:
            self.counters["gaps_cancelled"] += 1
        self._observe_id(pair_id, now, update)
        self.counters["headers_seen"] += 1

        tombstone = self.tombstones.pop(pair_id, None)
        if tombstone is not None:
            self.counters["tombstoned_arrivals"] += 1
            self.pending_announcements.pop(pair_id, None)
            self._closed_record(pair_id, tombstone[0], now, update)
            return update

        if self.buffer.is_full() and not self._handle_overflow(pair_id, now, update):
            return update

        entry = self.buffer.allocate(pair_id, now)
        if entry is None:
            raise ProtocolError(f"Node {self.node_id}: no slot for pair {pair_id} after overflow handling")
        record = QubitRecord(
            id=pair_id,
            stored_at=now,
            deadline=now + self.timeout_s,
            status=RecordStatus.AWAITING_PARTNER,
            slot=entry.slot,
        )
        self.records[pair_id] = record
        self.counters["photons_stored"] += 1
        update.messages.append(self._message(MessageKind.ANNOUNCE, pair_id, now))

        pending = self.pending_announcements.pop(pair_id, None)
        if pending is not None:
            msg, received_at = pending
            self._match(record, msg, received_at, now, update)
        return update

    def on_photon_lost(self, pair_id: int, now: float) -> NodeUpdate:
        """Handle a header whose photon did not arrive."""
        if pair_id in self.inferred:
            self.inferred.discard(pair_id)
            self.counters["headers_seen"] += 1
            self.counters["photon_lost"] += 1
            return NodeUpdate()
        if pair_id in self.records or pair_id in self.missing:
            raise ProtocolError(f"Node {self.node_id}: duplicate header for pair {pair_id}")

        update = NodeUpdate()
        if self.guarded_gaps.pop(pair_id, None) is not None:
            self.counters["gaps_cancelled"] += 1
        self._observe_id(pair_id, now, update)
        self.counters["headers_seen"] += 1
        self.counters["photon_lost"] += 1
        self.missing[pair_id] = now
        self.pending_announcements.pop(pair_id, None)
        self.tombstones.pop(pair_id, None)
        update.messages.append(self._message(MessageKind.GAP_DISCARD, pair_id, now))
        return update

    def on_announce_received(self, msg: ControlMessage, now: float) -> NodeUpdate:
        """Match the partner's announce against local storage, or park it."""
        if msg.kind is not MessageKind.ANNOUNCE:
            raise ProtocolError(f"Node {self.node_id}: expected announce, got {msg.kind.value}")

        update = NodeUpdate()
        record = self.records.get(msg.id)
        if record is not None:
            if record.status is RecordStatus.AWAITING_PARTNER:
                self._match(record, msg, now, now, update)
            else:
                self._late(msg)
        elif msg.id in self.missing or msg.id in self.tombstones or (
            msg.id <= self.highest_id_seen and msg.id not in self.guarded_gaps
        ):
            # Already handled locally (possibly pruned since)
            self._late(msg)
        else:
            self.pending_announcements[msg.id] = (msg, now)
        return update

    def on_timeout(self, pair_id: int, now: float) -> NodeUpdate:
        """Discard a qubit whose deadline passed; stale timers are no-ops."""
        update = NodeUpdate()
        record = self.records.get(pair_id)
        if record is None or record.status is not RecordStatus.AWAITING_PARTNER:
            return update
        if now < record.deadline:
            raise ProtocolError(
                f"Node {self.node_id}: timeout for pair {pair_id} at {now} before deadline {record.deadline}"
            )
        self._resolve(record, RecordStatus.DISCARDED_TIMEOUT, now, update)
        update.messages.append(self._message(MessageKind.DISCARD_NOTIFY, pair_id, now))
        return update

    def on_gap_guard_expired(self, now: float) -> NodeUpdate:
        """Report the guarded gaps whose photons did not show up in time."""
        update = NodeUpdate()
        self._commit_gaps(now, update)
        return update

    def on_discard_received(self, msg: ControlMessage, now: float) -> NodeUpdate:
        """Free local copies the partner discarded; remember unseen IDs as tombstones."""
        if msg.kind not in DISCARD_KINDS:
            raise ProtocolError(f"Node {self.node_id}: expected a discard message, got {msg.kind.value}")

        status = (
            RecordStatus.DISCARDED_NOTIFIED if msg.kind is MessageKind.DISCARD_NOTIFY else RecordStatus.DISCARDED_GAP
        )
        update = NodeUpdate()
        for pair_id in msg.pair_ids:
            record = self.records.get(pair_id)
            if record is not None:
                if record.status is RecordStatus.AWAITING_PARTNER:
                    self._resolve(record, status, now, update)
            elif pair_id in self.missing or (pair_id <= self.highest_id_seen and pair_id not in self.guarded_gaps):
                continue
            else:
                self.pending_announcements.pop(pair_id, None)
                self.tombstones[pair_id] = (status, now)
        return update

    def buffer_occupancy(self) -> int:
        return self.buffer.occupancy

    def photon_loss_rate(self) -> float:
        """Share of observed headers that arrived without a photon."""
        seen = self.counters["headers_seen"]
        return self.counters["photon_lost"] / seen if seen else 0.0

    def prune(self, now: float) -> int:
        """Forget resolved records, tombstones, gap markers and parked announces older than the horizon."""
        cutoff = now - self.prune_horizon_s
        stale_records = [
            pair_id for pair_id, record in self.records.items()
            if record.resolved_at is not None and record.resolved_at < cutoff
        ]
        for pair_id in stale_records:
            del self.records[pair_id]

        stale_tombstones = [pair_id for pair_id, (_, at) in self.tombstones.items() if at < cutoff]
        for pair_id in stale_tombstones:
            del self.tombstones[pair_id]

        stale_missing = [pair_id for pair_id, at in self.missing.items() if at < cutoff]
        for pair_id in stale_missing:
            del self.missing[pair_id]
            self.inferred.discard(pair_id)

        stale_pending = [pair_id for pair_id, (_, at) in self.pending_announcements.items() if at < cutoff]
        for pair_id in stale_pending:
            del self.pending_announcements[pair_id]
        self.counters["expired_announcements"] += len(stale_pending)

        pruned = len(stale_records) + len(stale_tombstones) + len(stale_missing) + len(stale_pending)
        if pruned:
            logger.debug(f"Node {self.node_id} pruned {pruned} entries older than {cutoff:.6f}")
        return pruned
