"""
Tests for the event scheduler and time conversion.
"""

import pytest

from errors import ProtocolError
from simulation.events import PS_PER_SECOND, EventKind, EventScheduler, SimEvent, ceil_ps, to_ps, to_seconds


class TestTimeConversion:
    """Seconds to integer picoseconds."""

    def test_round_trip(self):
        """Whole picoseconds survive the round trip."""
        assert to_ps(1.5e-3) == 1_500_000_000
        assert to_seconds(to_ps(0.239)) == pytest.approx(0.239, abs=1e-12)
        assert to_ps(1.0) == PS_PER_SECOND

    def test_rounds_to_nearest(self):
        """Sub-picosecond remainders are rounded."""
        assert to_ps(1.4e-12) == 1
        assert to_ps(1.6e-12) == 2

    def test_ceil_never_early(self):
        """Deadlines round up to the next whole picosecond."""
        assert ceil_ps(1.4e-12) == 2
        assert ceil_ps(2e-12) == 2
        assert to_seconds(ceil_ps(0.1 + 0.2)) >= 0.1 + 0.2


@pytest.fixture
def fired():
    return []


@pytest.fixture
def scheduler(fired):
    return EventScheduler(fired.append)


class TestEventScheduler:
    """Ordering and causality on the simpy environment."""

    def test_time_order(self, scheduler, fired):
        """Events fire in time order."""
        scheduler.schedule(30, EventKind.TIMEOUT_EXPIRY)
        scheduler.schedule(10, EventKind.EMIT_PAIR)
        scheduler.schedule(20, EventKind.PHOTON_ARRIVAL)
        scheduler.run()
        assert [event.at_ps for event in fired] == [10, 20, 30]
        assert scheduler.processed == 3
        assert scheduler.now_ps == 30

    def test_ties_in_schedule_order(self, scheduler, fired):
        """Equal-time events keep scheduling order."""
        for pair_id in range(5):
            scheduler.schedule(100, EventKind.MESSAGE_DELIVERY, node="A", pair_id=pair_id)
        scheduler.run()
        assert [event.pair_id for event in fired] == [0, 1, 2, 3, 4]

    def test_no_scheduling_in_past(self):
        """Scheduling before the current time is a causality error."""
        scheduler = EventScheduler(lambda event: scheduler.schedule(event.at_ps - 1, EventKind.EMIT_PAIR))
        scheduler.schedule(50, EventKind.EMIT_PAIR)
        with pytest.raises(ProtocolError):
            scheduler.run()

    def test_handler_schedules_follow_ups(self, fired):
        """Events scheduled from the handler at the same time fire after it."""
        def handler(event):
            fired.append(event)
            if event.kind is EventKind.PHOTON_ARRIVAL:
                scheduler.schedule(event.at_ps, EventKind.MESSAGE_DELIVERY)

        scheduler = EventScheduler(handler)
        scheduler.schedule(5, EventKind.PHOTON_ARRIVAL)
        scheduler.schedule(5, EventKind.TIMEOUT_EXPIRY)
        scheduler.run()
        assert [event.kind for event in fired] == [
            EventKind.PHOTON_ARRIVAL, EventKind.TIMEOUT_EXPIRY, EventKind.MESSAGE_DELIVERY,
        ]

    def test_stop_leaves_rest_unfired(self, fired):
        """stop() ends the run after the current event."""
        def handler(event):
            fired.append(event)
            if event.kind is EventKind.END_OF_RUN:
                scheduler.stop()

        scheduler = EventScheduler(handler)
        scheduler.schedule(7, EventKind.END_OF_RUN)
        scheduler.schedule(9, EventKind.TIMEOUT_EXPIRY)
        scheduler.run()
        assert [event.kind for event in fired] == [EventKind.END_OF_RUN]
        assert fired[0].at == pytest.approx(7e-12)

    def test_process_fires_its_own_events(self, scheduler, fired):
        """A simpy process can wait for absolute times and fire events."""
        def source():
            for pair_id, at_ps in enumerate((0, 4, 8)):
                yield scheduler.wait_until(at_ps)
                scheduler.fire(SimEvent(at_ps=at_ps, kind=EventKind.EMIT_PAIR, pair_id=pair_id))

        scheduler.start(source())
        scheduler.schedule(6, EventKind.PHOTON_ARRIVAL)
        scheduler.run()
        assert [(event.at_ps, event.kind) for event in fired] == [
            (0, EventKind.EMIT_PAIR),
            (4, EventKind.EMIT_PAIR),
            (6, EventKind.PHOTON_ARRIVAL),
            (8, EventKind.EMIT_PAIR),
        ]
        assert scheduler.processed == 4
