"""Deterministic discrete-event engine.

Simulated time is an integer number of microseconds so event ordering never
depends on binary floating point. Events are totally ordered by
``(fire_at, seq)``; ``seq`` is the insertion counter, so simultaneous events
fire in the order they were scheduled.
"""

import heapq
import time
import zlib
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, TextIO, Union

import numpy as np

from wsnsim.errors import SchedulingError, WallTimeExceeded

SimTime = int
US_PER_S = 1_000_000
HARNESS = "harness"

# how many events run between two wall-clock budget checks
_BUDGET_CHECK_EVERY = 1024


def seconds_to_time(seconds: Union[int, float, str, Fraction]) -> SimTime:
    """Convert seconds to SimTime, rounding to the nearest microsecond."""
    if isinstance(seconds, float):
        seconds = str(seconds)
    value = round(Fraction(seconds) * US_PER_S)
    if value < 0:
        raise SchedulingError(f"negative time: {seconds}s")
    return value


def time_to_seconds(t: SimTime) -> float:
    return t / US_PER_S


def format_time(t: SimTime) -> str:
    """Fixed 6-decimal seconds, identical on every platform."""
    return f"{t // US_PER_S}.{t % US_PER_S:06d}"


@dataclass(order=True)
class SimEvent:
    fire_at: SimTime
    seq: int
    target: Union[int, str] = field(compare=False)
    kind: str = field(compare=False)
    action: Optional[Callable[["SimEvent"], None]] = field(
        default=None, compare=False, repr=False
    )
    payload: Any = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class EventHandle:
    seq: int
    fire_at: SimTime


@dataclass(frozen=True)
class TraceRecord:
    time: SimTime
    seq: int
    target: Union[int, str]
    kind: str
    detail: Mapping[str, Any] = field(default_factory=dict)

    def line(self) -> str:
        return f"{format_time(self.time)}\t{self.seq}\t{self.target}\t{self.kind}"


class RngStreams:
    """Named, independent random streams derived from one run seed.

    The stream for a label depends only on ``(seed, label)``, so adding a new
    consumer of randomness never perturbs the draws of existing ones.
    """

    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError("seed must be nonnegative")
        self.seed = seed
        self._streams: Dict[str, np.random.Generator] = {}

    def stream(self, label: str) -> np.random.Generator:
        if label not in self._streams:
            seed_seq = np.random.SeedSequence(
                entropy=self.seed, spawn_key=(zlib.crc32(label.encode("utf-8")),)
            )
            self._streams[label] = np.random.Generator(np.random.PCG64(seed_seq))
        return self._streams[label]


class Simulator:
    """Event queue plus simulated clock for one run.

    A Simulator owns all mutable state of its run and is never shared
    between threads.
    """

    def __init__(
        self,
        seed: int = 0,
        trace: bool = False,
        wall_time_budget_s: Optional[float] = None,
    ):
        self.rng = RngStreams(seed)
        self.tracing = trace
        self.trace: List[TraceRecord] = []
        self.wall_time_budget_s = wall_time_budget_s
        self._clock: SimTime = 0
        self._seq = 0
        self._queue: List[SimEvent] = []
        self._pending: Dict[int, SimEvent] = {}
        self._current: Optional[SimEvent] = None

    @property
    def now(self) -> SimTime:
        return self._clock

    @property
    def pending_count(self) -> int:
        return len(self._pending)

    def schedule(
        self,
        fire_at: SimTime,
        target: Union[int, str],
        kind: str,
        action: Optional[Callable[[SimEvent], None]] = None,
        payload: Any = None,
    ) -> EventHandle:
        if fire_at < self._clock:
            raise SchedulingError(
                f"cannot schedule {kind!r} at {format_time(fire_at)}s, "
                f"clock is already {format_time(self._clock)}s"
            )
        event = SimEvent(fire_at, self._seq, target, kind, action, payload)
        self._seq += 1
        heapq.heappush(self._queue, event)
        self._pending[event.seq] = event
        return EventHandle(event.seq, fire_at)

    def schedule_in(
        self,
        delay: SimTime,
        target: Union[int, str],
        kind: str,
        action: Optional[Callable[[SimEvent], None]] = None,
        payload: Any = None,
    ) -> EventHandle:
        return self.schedule(self._clock + delay, target, kind, action, payload)

    def cancel(self, handle: Optional[EventHandle]) -> bool:
        """Remove a pending event; False if it already fired or was cancelled."""
        if handle is None:
            return False
        # heap entry is skipped lazily once it is no longer pending
        return self._pending.pop(handle.seq, None) is not None

    def run_until(self, t_end: SimTime) -> int:
        if t_end < self._clock:
            raise SchedulingError(
                f"run_until({format_time(t_end)}s) is before the clock "
                f"({format_time(self._clock)}s)"
            )
        executed = 0
        started = time.perf_counter()
        while self._queue and self._queue[0].fire_at <= t_end:
            event = heapq.heappop(self._queue)
            if self._pending.pop(event.seq, None) is None:
                continue
            self._clock = event.fire_at
            self._current = event
            if self.tracing:
                self.trace.append(
                    TraceRecord(event.fire_at, event.seq, event.target, event.kind)
                )
            if event.action is not None:
                event.action(event)
            executed += 1
            if (
                self.wall_time_budget_s is not None
                and executed % _BUDGET_CHECK_EVERY == 0
                and time.perf_counter() - started > self.wall_time_budget_s
            ):
                raise WallTimeExceeded(
                    self.wall_time_budget_s, time_to_seconds(self._clock)
                )
        self._current = None
        self._clock = t_end
        return executed

    def record(self, target: Union[int, str], kind: str, **detail: Any) -> None:
        """Append a sub-event record (e.g. a transmission) to the trace."""
        if not self.tracing:
            return
        seq = self._current.seq if self._current is not None else -1
        self.trace.append(TraceRecord(self._clock, seq, target, kind, detail))

    def dump_trace(self, out: Union[str, Path, TextIO]) -> None:
        """Write the trace as tab-separated ``time seq target kind`` lines."""
        if isinstance(out, (str, Path)):
            with open(out, "w") as f:
                self.dump_trace(f)
            return
        for record in self.trace:
            out.write(record.line() + "\n")
