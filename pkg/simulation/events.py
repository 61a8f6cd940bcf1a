"""
Event scheduling for the discrete-event engine.

Time is kept in integer picoseconds on a simpy Environment. simpy processes
events in (time, priority, scheduling order), so equal-time events always run
in the order they were scheduled.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Generator, Optional

import simpy

from errors import ProtocolError

logger = logging.getLogger(__name__)

PS_PER_SECOND = 10**12


def to_ps(seconds: float) -> int:
    return int(round(seconds * PS_PER_SECOND))


def to_seconds(ps: int) -> float:
    return ps / PS_PER_SECOND


def ceil_ps(seconds: float) -> int:
    """First whole picosecond that is not earlier than `seconds`."""
    at_ps = to_ps(seconds)
    if to_seconds(at_ps) < seconds:
        at_ps += 1
    return at_ps


class EventKind(Enum):
    EMIT_PAIR = "emit_pair"
    PHOTON_ARRIVAL = "photon_arrival"
    PHOTON_LOST = "photon_lost"
    MESSAGE_DELIVERY = "message_delivery"
    TIMEOUT_EXPIRY = "timeout_expiry"
    GAP_GUARD_EXPIRY = "gap_guard_expiry"
    END_OF_RUN = "end_of_run"


@dataclass(frozen=True)
class SimEvent:
    """What happens at a point in simulated time."""
    at_ps: int
    kind: EventKind
    node: Optional[str] = None
    pair_id: Optional[int] = None
    payload: Any = None

    @property
    def at(self) -> float:
        return to_seconds(self.at_ps)


class EventScheduler:
    """
    Runs SimEvents on a simpy Environment, handing each to `handler` when it fires.

    Args:
        handler: Called once per fired event, in simulated-time order
    """

    def __init__(self, handler: Callable[[SimEvent], None]):
        self.env = simpy.Environment(initial_time=0)
        self.handler = handler
        self.processed = 0
        self._stopped = False

    @property
    def now_ps(self) -> int:
        return self.env.now

    def schedule(
        self,
        at_ps: int,
        kind: EventKind,
        node: Optional[str] = None,
        pair_id: Optional[int] = None,
        payload: Any = None,
    ) -> SimEvent:
        """
        Fire a SimEvent at absolute time `at_ps`.

        Raises:
            ProtocolError: If `at_ps` lies before the current time
        """
        delay = at_ps - self.env.now
        if delay < 0:
            raise ProtocolError(f"Cannot schedule {kind.value} at {at_ps} ps before now ({self.env.now} ps)")
        event = SimEvent(at_ps=at_ps, kind=kind, node=node, pair_id=pair_id, payload=payload)
        self.env.timeout(delay, value=event).callbacks.append(self._on_timeout)
        return event

    def wait_until(self, at_ps: int) -> simpy.events.Timeout:
        """Timeout for a process to yield on; fires at absolute time `at_ps`."""
        if at_ps < self.env.now:
            raise ProtocolError(f"Cannot wait until {at_ps} ps before now ({self.env.now} ps)")
        return self.env.timeout(at_ps - self.env.now)

    def start(self, process: Generator) -> simpy.Process:
        return self.env.process(process)

    def fire(self, event: SimEvent) -> None:
        """Hand an event to the handler now; processes use this for their own steps."""
        self.processed += 1
        self.handler(event)

    def _on_timeout(self, timeout: simpy.events.Event) -> None:
        self.fire(timeout.value)

    def stop(self) -> None:
        self._stopped = True

    def run(self) -> None:
        """Step the environment until stop() is called or nothing is scheduled."""
        while not self._stopped:
            try:
                self.env.step()
            except simpy.core.EmptySchedule:
                break
