"""Single-replication simulations: one busy cycle, or a fixed time horizon."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..dist import ServiceDistribution
from ..errors import DomainError, SimulationTruncated
from .queues import ARRIVAL, make_queue
from .streams import ArrivalStream, ServiceStream
from .trace import TraceEvent

DEFAULT_EVENT_CAP = 10_000_000
DISCIPLINES = ("fb", "fbstar", "fifo")


@dataclass(frozen=True)
class QueueParams:
    lam: float
    dist: ServiceDistribution
    discipline: str = "fb"

    def __post_init__(self):
        if not self.lam > 0 or not math.isfinite(self.lam):
            raise DomainError(f"arrival rate must be positive, got {self.lam}")
        if self.discipline not in DISCIPLINES:
            raise DomainError(f"discipline must be one of {DISCIPLINES}, got {self.discipline!r}")

    @property
    def rho(self) -> float:
        return self.lam * self.dist.mean()


@dataclass(frozen=True)
class BusyCycleRecord:
    max_len: int
    cycle_len: float
    busy_len: float
    k_subbusy: int | None = None
    first_service: float | None = None
    sub_maxima: tuple[int, ...] = ()
    events: int = 0


@dataclass(frozen=True)
class HorizonResult:
    max_len: int
    first_passage: float | None
    arrivals: int
    final_len: int
    events: int = 0


@dataclass
class Streams:
    """The pair of random streams one replication consumes."""

    arrivals: ArrivalStream
    services: ServiceStream

    @classmethod
    def for_replication(cls, params: QueueParams, seed: int, index: int) -> "Streams":
        return cls(ArrivalStream(params.lam, seed, index), ServiceStream(params.dist, seed, index))


@dataclass
class _Recorder:
    trace: list | None = field(default=None)

    def __call__(self, q, clock, kind, added=0.0, departures=0):
        self.trace.append(
            TraceEvent(
                clock=clock,
                kind=kind,
                queue_len=q.n,
                customers=tuple(q.customers()),
                served=tuple(q.served()),
                added=added,
                departures=departures,
            )
        )


def run_busy_cycle(
    params: QueueParams,
    streams: Streams,
    first_service: float | None = None,
    event_cap: int = DEFAULT_EVENT_CAP,
    trace: list | None = None,
) -> BusyCycleRecord:
    """Simulate an idle period followed by one busy period, starting empty.

    ``first_service`` forces the requirement of the customer who opens the
    busy period.  Completions and merges are processed before an arrival that
    falls at exactly the same instant.
    """
    q = make_queue(params.discipline)
    record = _Recorder(trace) if trace is not None else None
    next_arrival = streams.arrivals.next
    next_service = streams.services.next

    idle = next_arrival()
    clock = idle
    b1 = next_service() if first_service is None else float(first_service)
    q.arrive(b1)
    if record:
        record(q, clock, ARRIVAL, added=b1)
    max_len = 1
    arr = clock + next_arrival()
    events = 1

    while q.n:
        dt = q.next_internal()
        if arr - clock < dt:
            q.advance(arr - clock)
            clock = arr
            req = next_service()
            q.arrive(req)
            if q.n > max_len:
                max_len = q.n
            arr = clock + next_arrival()
            if record:
                record(q, clock, ARRIVAL, added=req)
        else:
            kind = q.pending
            clock += dt
            gone = q.fire()
            if record:
                record(q, clock, kind, departures=gone)
        events += 1
        if events > event_cap:
            raise SimulationTruncated(
                f"busy period exceeded {event_cap} events (load {params.rho:.4g})", events, clock
            )

    star = params.discipline == "fbstar"
    return BusyCycleRecord(
        max_len=max_len,
        cycle_len=clock,
        busy_len=clock - idle,
        k_subbusy=q.k_subbusy if star else None,
        first_service=b1 if star else None,
        sub_maxima=tuple(q.sub_maxima) if star else (),
        events=events,
    )


def run_horizon(
    params: QueueParams,
    t_end: float,
    d: int,
    streams: Streams,
    event_cap: int = DEFAULT_EVENT_CAP,
    trace: list | None = None,
    stop_at_passage: bool = False,
) -> HorizonResult:
    """Run from an empty system over ``[0, t_end]``.

    Returns the running maximum of the number in system and the first time
    that number exceeds ``d`` (``None`` if it never does).
    """
    if not t_end > 0:
        raise DomainError("t_end must be positive")
    q = make_queue(params.discipline)
    record = _Recorder(trace) if trace is not None else None
    next_arrival = streams.arrivals.next
    next_service = streams.services.next

    clock = 0.0
    arr = next_arrival()
    max_len = 0
    passage = None
    arrivals = 0
    events = 0
    while True:
        dt = q.next_internal()
        if arr - clock < dt:
            if arr > t_end:
                break
            q.advance(arr - clock)
            clock = arr
            req = next_service()
            q.arrive(req)
            arrivals += 1
            if q.n > max_len:
                max_len = q.n
                if passage is None and max_len > d:
                    passage = clock
                    if stop_at_passage:
                        break
            arr = clock + next_arrival()
            if record:
                record(q, clock, ARRIVAL, added=req)
        else:
            if clock + dt > t_end:
                break
            kind = q.pending
            clock += dt
            gone = q.fire()
            if record:
                record(q, clock, kind, departures=gone)
        events += 1
        if events > event_cap:
            raise SimulationTruncated(f"horizon run exceeded {event_cap} events", events, clock)

    return HorizonResult(max_len=max_len, first_passage=passage, arrivals=arrivals, final_len=q.n, events=events)
