"""
Discrete-event simulation of pair distribution and verification for one node pair.

The source emits pair k at round(k / rate) picoseconds. Each arm independently
survives with its path transmission; the classical header always arrives, so
a lost photon shows up at the node as a header without a photon. Control
messages travel with delays from the latency channel, and every stored qubit
carries a timer at its deadline.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Generator, List, Optional, Tuple

import numpy as np

from buffer_manager import BufferManager
from config import PRUNE_EVERY_N_EVENTS
from errors import ConfigurationError, ProtocolError
from memory.decoherence import ExposureIntervals, make_evaluator
from network.latency import per_direction_policy
from network.topology import survival_probability
from protocol.messages import (
    DISCARD_KINDS,
    MESSAGE_TRACE_FIELDS,
    ControlMessage,
    MessageKind,
    NodeUpdate,
    RecordStatus,
)
from protocol.node import ProtocolNode
from simulation.events import PS_PER_SECOND, EventKind, EventScheduler, SimEvent, ceil_ps, to_ps, to_seconds
from simulation.metrics import FidelityStats, NodeStats, OccupancyTracker, PairOutcome, RunReport
from simulation.settings import RunConfig

logger = logging.getLogger(__name__)

TRACE_FIELDS = ("at_s", "event", "node", "pair_id") + MESSAGE_TRACE_FIELDS


def verification_exposure(
    t_store_a: float,
    t_store_b: float,
    t_verify_a: float,
    t_verify_b: float,
) -> ExposureIntervals:
    """
    Idle times of both qubits, measured up to the later verification.

    Raises:
        ProtocolError: If a verification precedes its storage
    """
    if t_verify_a < t_store_a or t_verify_b < t_store_b:
        raise ProtocolError(
            f"Verification before storage: store=({t_store_a}, {t_store_b}) verify=({t_verify_a}, {t_verify_b})"
        )
    t_verify_pair = max(t_verify_a, t_verify_b)
    return ExposureIntervals(tau_a_s=t_verify_pair - t_store_a, tau_b_s=t_verify_pair - t_store_b)


def emission_time_ps(index: int, rate_hz: float) -> int:
    return int(round(index * PS_PER_SECOND / rate_hz))


@dataclass
class _PairLedger:
    """Both-arm bookkeeping for a pair whose photons both survived."""
    stored: List[Optional[float]]
    verified: List[Optional[float]]
    status: List[Optional[RecordStatus]]

    @classmethod
    def new(cls) -> "_PairLedger":
        return cls(stored=[None, None], verified=[None, None], status=[None, None])

    def outcome(self) -> PairOutcome:
        consumed = [s is RecordStatus.CONSUMED for s in self.status]
        if all(consumed):
            return PairOutcome.VERIFIED
        if RecordStatus.DISCARDED_OVERFLOW in self.status:
            return PairOutcome.OVERFLOW
        if None in self.status:
            return PairOutcome.IN_FLIGHT
        if any(consumed):
            return PairOutcome.ONE_SIDED
        return PairOutcome.TIMED_OUT


class Simulation:
    """
    One run of the verification protocol over a configured node pair.

    Args:
        config: Validated run configuration; its seed must be set
        run_index: Index within a sweep, mixed into the RNG streams
        trace: Collect a row per processed event
    """

    def __init__(self, config: RunConfig, run_index: int = 0, trace: bool = False):
        if config.seed is None:
            raise ConfigurationError("Run configuration has no seed; call resolve_seed() first")
        self.config = config
        self.run_index = run_index
        self.trace_enabled = trace
        self.trace_rows: List[Dict[str, Any]] = []

        topology = config.topology.build()
        self.pair = topology.pair(config.topology.pair_under_test)
        path_a, path_b = topology.arms(self.pair.label)
        self.node_ids = (self.pair.node_a, self.pair.node_b)

        delay_a = path_a.propagation_delay_s
        delay_b = path_b.propagation_delay_s
        if config.simulation.skew_override_s is not None:
            delay_b = delay_a + config.simulation.skew_override_s
        self.arm_delay_ps = (to_ps(delay_a), to_ps(delay_b))
        self.delta_tq_s = abs(delay_a - delay_b)

        override = config.simulation.survival_override
        if override is not None:
            self.survival = (override.a, override.b)
        else:
            self.survival = (survival_probability(path_a.total_loss_db), survival_probability(path_b.total_loss_db))

        self.tech = config.technology()
        self.convention = config.memory.convention
        self.timeout_s = config.timeout_s()
        self.rate_hz = config.source.rate_hz
        self.pair_count = config.source.resolved_pair_count()
        self.duration_s = config.source.resolved_duration_s()

        seed_seq = np.random.SeedSequence(entropy=config.seed, spawn_key=(run_index,))
        loss_seed, latency_seed = seed_seq.spawn(2)
        self._loss_rng = np.random.default_rng(loss_seed)
        self.channel = per_direction_policy(
            config.latency.build(), config.latency.policy, np.random.default_rng(latency_seed)
        )
        self.evaluator = make_evaluator(config.simulation.fidelity_model, self.tech, self.convention)

        gap_guard = config.protocol.gap_guard_s
        if gap_guard is None:
            gap_guard = self.delta_tq_s
        self.prune_horizon_s = config.protocol.prune_horizon_factor * max(self.timeout_s, 1e-12)

        self.trackers = {node_id: OccupancyTracker(self.duration_s) for node_id in self.node_ids}
        self.buffers = BufferManager(config.protocol.buffer_capacity)
        self.nodes: Dict[str, ProtocolNode] = {}
        for node_id in self.node_ids:
            buffer = self.buffers.get_node_buffer(node_id, on_change=self.trackers[node_id].update)
            self.nodes[node_id] = ProtocolNode(
                node_id=node_id,
                timeout_s=self.timeout_s,
                buffer=buffer,
                overflow_policy=config.protocol.overflow_policy,
                gap_guard_s=gap_guard,
                batch_gap_discards=config.protocol.batch_gap_discards,
                prune_horizon_s=self.prune_horizon_s,
            )

        self.scheduler = EventScheduler(self._dispatch)
        self.ended = False
        self.ledger: Dict[int, _PairLedger] = {}
        self.outcomes: Dict[PairOutcome, int] = {outcome: 0 for outcome in PairOutcome}
        self.message_counts: Dict[str, int] = {kind.value: 0 for kind in MessageKind}
        self.fidelities: List[float] = []

    # ----------------------------------------------------------------- helpers

    def _side(self, node_id: str) -> int:
        return self.node_ids.index(node_id)

    def _partner(self, node_id: str) -> str:
        return self.node_ids[1 - self._side(node_id)]

    def _trace(self, event: SimEvent, msg: Optional[ControlMessage] = None) -> None:
        row = {"at_s": event.at, "event": event.kind.value, "node": event.node, "pair_id": event.pair_id}
        if msg is not None:
            row.update(msg.trace_row(delivered_at=event.at))
        else:
            row.update({name: None for name in MESSAGE_TRACE_FIELDS})
        self.trace_rows.append(row)

    def _apply(self, node_id: str, update: NodeUpdate, now_ps: int) -> None:
        side = self._side(node_id)
        node = self.nodes[node_id]

        for msg in update.messages:
            self.message_counts[msg.kind.value] += 1
            sent_ps = max(now_ps, to_ps(msg.sent_at))
            delay = self.channel.delay_for(msg.id, node_id, now=msg.sent_at)
            self.scheduler.schedule(
                sent_ps + to_ps(delay), EventKind.MESSAGE_DELIVERY, node=self._partner(node_id),
                pair_id=msg.id, payload=msg,
            )
            if msg.kind is MessageKind.ANNOUNCE:
                record = node.records[msg.id]
                ledger = self.ledger.get(msg.id)
                if ledger is not None:
                    ledger.stored[side] = record.stored_at
                if record.status is RecordStatus.AWAITING_PARTNER:
                    self._schedule_at(record.deadline, EventKind.TIMEOUT_EXPIRY, node_id, record.id)

        for check_at in update.gap_checks:
            self._schedule_at(check_at, EventKind.GAP_GUARD_EXPIRY, node_id)

        for pair_id in update.verified:
            ledger = self.ledger.get(pair_id)
            if ledger is None:
                raise ProtocolError(f"Node {node_id} verified pair {pair_id} whose partner photon was lost")
            ledger.verified[side] = to_seconds(now_ps)
            if None not in ledger.verified:
                exposure = verification_exposure(
                    ledger.stored[0], ledger.stored[1], ledger.verified[0], ledger.verified[1]
                )
                self.fidelities.append(self.evaluator.evaluate(exposure))

        for pair_id, status in update.resolved:
            ledger = self.ledger.get(pair_id)
            if ledger is None or status is RecordStatus.VERIFIED:
                continue
            ledger.status[side] = status
            if None not in ledger.status:
                self.outcomes[ledger.outcome()] += 1
                del self.ledger[pair_id]

    def _schedule_at(self, at: float, kind: EventKind, node_id: str, pair_id: Optional[int] = None) -> None:
        # Local timers never fire before their deadline
        at_ps = max(ceil_ps(at), self.scheduler.now_ps)
        self.scheduler.schedule(at_ps, kind, node=node_id, pair_id=pair_id)

    def _source(self) -> Generator:
        """simpy process emitting pair k at emission_time_ps(k)."""
        for pair_id in range(self.pair_count):
            at_ps = emission_time_ps(pair_id, self.rate_hz)
            yield self.scheduler.wait_until(at_ps)
            self.scheduler.fire(SimEvent(at_ps=at_ps, kind=EventKind.EMIT_PAIR, pair_id=pair_id))

    def _emit(self, event: SimEvent) -> None:
        pair_id = event.pair_id
        survived = tuple(self._loss_rng.random() < p for p in self.survival)
        for side, node_id in enumerate(self.node_ids):
            kind = EventKind.PHOTON_ARRIVAL if survived[side] else EventKind.PHOTON_LOST
            self.scheduler.schedule(event.at_ps + self.arm_delay_ps[side], kind, node=node_id, pair_id=pair_id)
        if all(survived):
            self.ledger[pair_id] = _PairLedger.new()
        else:
            self.outcomes[PairOutcome.LOST] += 1

    def _prune(self, now: float) -> None:
        for node in self.nodes.values():
            node.prune(now)
        self.channel.prune(now - self.prune_horizon_s)

    def _dispatch(self, event: SimEvent) -> None:
        now = event.at

        if event.kind is EventKind.END_OF_RUN:
            self.ended = True
            if self.trace_enabled:
                self._trace(event)
            if not self.config.simulation.drain:
                self.scheduler.stop()
            return

        msg = None
        if event.kind is EventKind.EMIT_PAIR:
            self._emit(event)
        elif event.kind is EventKind.PHOTON_ARRIVAL:
            self._apply(event.node, self.nodes[event.node].on_photon_stored(event.pair_id, now), event.at_ps)
        elif event.kind is EventKind.PHOTON_LOST:
            self._apply(event.node, self.nodes[event.node].on_photon_lost(event.pair_id, now), event.at_ps)
        elif event.kind is EventKind.TIMEOUT_EXPIRY:
            self._apply(event.node, self.nodes[event.node].on_timeout(event.pair_id, now), event.at_ps)
        elif event.kind is EventKind.GAP_GUARD_EXPIRY:
            self._apply(event.node, self.nodes[event.node].on_gap_guard_expired(now), event.at_ps)
        elif event.kind is EventKind.MESSAGE_DELIVERY:
            msg = event.payload
            node = self.nodes[event.node]
            if msg.kind is MessageKind.ANNOUNCE:
                update = node.on_announce_received(msg, now)
            elif msg.kind in DISCARD_KINDS:
                update = node.on_discard_received(msg, now)
            else:
                raise ProtocolError(f"Unknown message kind {msg.kind}")
            self._apply(event.node, update, event.at_ps)

        if self.trace_enabled:
            self._trace(event, msg)
        if self.scheduler.processed % PRUNE_EVERY_N_EVENTS == 0:
            self._prune(now)

    # -------------------------------------------------------------------- run

    def run(self) -> RunReport:
        """Process events until the end of the run (and the drain, if enabled)."""
        logger.info(
            f"Run {self.run_index}: pair {self.pair.label}, {self.pair_count} pairs at {self.rate_hz:.3g} Hz, "
            f"timeout {self.timeout_s:.6g} s, survival ({self.survival[0]:.4g}, {self.survival[1]:.4g}), "
            f"latency {self.channel.model.describe()}"
        )
        self.scheduler.start(self._source())
        self.scheduler.schedule(to_ps(self.duration_s), EventKind.END_OF_RUN)
        self.scheduler.run()

        if not self.ended:
            raise ConfigurationError("Event schedule exhausted before the end of the run")

        report = self._report()
        report.check_conservation()
        logger.info(
            f"Run {self.run_index} finished: {report.emitted} emitted, {report.verified} verified "
            f"({report.verified_rate_hz:.4g} pairs/s), outcomes {report.outcomes}"
        )
        return report

    def _report(self) -> RunReport:
        for ledger in self.ledger.values():
            self.outcomes[ledger.outcome()] += 1
        self.ledger.clear()

        outcomes = {outcome.value: count for outcome, count in self.outcomes.items()}
        consumed = {node_id: node.counters[RecordStatus.CONSUMED.value] for node_id, node in self.nodes.items()}
        agreement_ok = outcomes[PairOutcome.ONE_SIDED.value] == 0
        if not agreement_ok:
            logger.warning(f"Agreement violated: {outcomes[PairOutcome.ONE_SIDED.value]} pairs consumed at one node only")

        discard_causes = [status for status in RecordStatus if status.is_discard]
        nodes = {
            node_id: NodeStats(
                mean_occupancy=self.trackers[node_id].mean(),
                max_occupancy=self.trackers[node_id].peak,
                photon_loss_rate=node.photon_loss_rate(),
                late_messages=node.counters["late_messages"],
                overflow_dropped=node.counters["overflow_dropped"],
                discards={status.value: node.counters[status.value] for status in discard_causes},
            )
            for node_id, node in self.nodes.items()
        }
        return RunReport(
            seed=self.config.seed,
            run_index=self.run_index,
            pair_label=self.pair.label,
            node_a=self.node_ids[0],
            node_b=self.node_ids[1],
            technology=self.tech.name,
            convention=self.convention.value,
            source_rate_hz=self.rate_hz,
            duration_s=self.duration_s,
            timeout_s=self.timeout_s,
            delta_tq_s=self.delta_tq_s,
            survival_a=self.survival[0],
            survival_b=self.survival[1],
            emitted=self.pair_count,
            outcomes=outcomes,
            consumed=consumed,
            messages=dict(self.message_counts),
            fidelity=FidelityStats.from_values(self.fidelities, self.config.simulation.histogram_bin_width),
            nodes=nodes,
            agreement_ok=agreement_ok,
            events_processed=self.scheduler.processed,
            config_echo=self.config.model_dump(mode="json"),
        )


def run(config: RunConfig, run_index: int = 0, trace: bool = False) -> RunReport:
    """Run one simulation; the seed is resolved first if missing."""
    return Simulation(config.resolve_seed(), run_index=run_index, trace=trace).run()


def run_with_trace(config: RunConfig, run_index: int = 0) -> Tuple[RunReport, List[Dict[str, Any]]]:
    simulation = Simulation(config.resolve_seed(), run_index=run_index, trace=True)
    report = simulation.run()
    return report, simulation.trace_rows
