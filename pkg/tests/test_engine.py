"""Event ordering, cancellation, clock rules and seeded streams."""

import io

import pytest

from wsnsim.engine import (
    RngStreams,
    Simulator,
    format_time,
    seconds_to_time,
    time_to_seconds,
)
from wsnsim.errors import SchedulingError, WallTimeExceeded


def _recorder(log):
    return lambda event: log.append((event.fire_at, event.kind))


def test_seconds_round_to_microseconds():
    assert seconds_to_time(0.1) == 100_000
    assert seconds_to_time("2") == 2_000_000
    assert seconds_to_time(1e-7) == 0
    assert time_to_seconds(2_500_000) == 2.5
    assert format_time(1_000_001) == "1.000001"


def test_negative_seconds_rejected():
    with pytest.raises(SchedulingError):
        seconds_to_time(-1)


def test_events_fire_in_time_order():
    sim = Simulator()
    log = []
    sim.schedule(30, 0, "c", _recorder(log))
    sim.schedule(10, 0, "a", _recorder(log))
    sim.schedule(20, 0, "b", _recorder(log))
    assert sim.run_until(100) == 3
    assert log == [(10, "a"), (20, "b"), (30, "c")]


def test_simultaneous_events_fire_in_insertion_order():
    sim = Simulator()
    log = []
    for kind in ("first", "second", "third"):
        sim.schedule(5, 0, kind, _recorder(log))
    sim.run_until(5)
    assert [kind for _, kind in log] == ["first", "second", "third"]


def test_cancelled_event_never_fires():
    sim = Simulator()
    log = []
    handle = sim.schedule(10, 0, "cancelled", _recorder(log))
    sim.schedule(10, 0, "kept", _recorder(log))
    assert sim.cancel(handle)
    assert not sim.cancel(handle)
    sim.run_until(20)
    assert log == [(10, "kept")]
    assert sim.pending_count == 0


def test_run_until_stops_at_horizon_and_advances_clock():
    sim = Simulator()
    log = []
    sim.schedule(10, 0, "in", _recorder(log))
    sim.schedule(11, 0, "out", _recorder(log))
    sim.run_until(10)
    assert log == [(10, "in")]
    assert sim.now == 10
    assert sim.pending_count == 1


def test_event_actions_may_schedule_follow_ups():
    sim = Simulator()
    log = []

    def ping(event):
        log.append(event.fire_at)
        if event.fire_at < 30:
            sim.schedule_in(10, 0, "ping", ping)

    sim.schedule(0, 0, "ping", ping)
    sim.run_until(100)
    assert log == [0, 10, 20, 30]


def test_scheduling_in_the_past_is_an_error():
    sim = Simulator()
    sim.run_until(50)
    with pytest.raises(SchedulingError):
        sim.schedule(49, 0, "late")
    with pytest.raises(SchedulingError):
        sim.run_until(10)


def test_streams_depend_only_on_seed_and_label():
    a = RngStreams(7)
    b = RngStreams(7)
    # touching another stream first must not shift this one
    b.stream("other").random(5)
    assert a.stream("mac").random(4).tolist() == b.stream("mac").random(4).tolist()
    assert (
        RngStreams(8).stream("mac").random(4).tolist()
        != RngStreams(7).stream("mac").random(4).tolist()
    )


def test_negative_seed_rejected():
    with pytest.raises(ValueError):
        RngStreams(-1)


def test_trace_records_events_and_dumps_four_columns():
    sim = Simulator(trace=True)
    sim.schedule(1_500_000, 3, "start", lambda event: sim.record(3, "tx", bytes=10))
    sim.run_until(2_000_000)
    assert [r.kind for r in sim.trace] == ["start", "tx"]
    assert sim.trace[1].detail == {"bytes": 10}
    out = io.StringIO()
    sim.dump_trace(out)
    assert out.getvalue().splitlines() == [
        "1.500000\t0\t3\tstart",
        "1.500000\t0\t3\ttx",
    ]


def test_trace_disabled_by_default():
    sim = Simulator()
    sim.schedule(1, 0, "x", lambda event: sim.record(0, "tx"))
    sim.run_until(1)
    assert sim.trace == []


def test_wall_time_budget_stops_runaway_run():
    sim = Simulator(wall_time_budget_s=1e-9)

    def storm(event):
        sim.schedule_in(1, 0, "storm", storm)

    sim.schedule(0, 0, "storm", storm)
    with pytest.raises(WallTimeExceeded):
        sim.run_until(10**9)
