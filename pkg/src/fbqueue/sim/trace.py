"""Event traces and the simulator self-check."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class TraceEvent:
    """Queue snapshot taken right after an event.

    ``customers`` holds ``(requirement, age)`` pairs; a customer is identified
    by its requirement, which is unique almost surely.  ``served`` lists the
    requirements of the customers in service after the event.
    """

    clock: float
    kind: str
    queue_len: int
    customers: tuple
    served: tuple
    added: float = 0.0
    departures: int = 0

    def line(self) -> str:
        return f"{self.clock!r},{self.kind},{self.queue_len}"


def format_trace(trace) -> str:
    """Line-delimited ``clock,event_kind,queue_len`` records."""
    return "".join(ev.line() + "\n" for ev in trace)


@dataclass(frozen=True)
class ConservationReport:
    passed: bool
    checked: int
    failures: tuple[str, ...] = ()


def _fail(failures, i, msg):
    failures.append(f"event {i}: {msg}")


def verify_work_conservation(trace, discipline: str = "fb", rtol: float = 1e-9) -> ConservationReport:
    """Re-derive every step of a trace from its predecessor.

    Checks, between consecutive events: total remaining work fell by exactly
    the elapsed time while the system was busy (plus any arriving work);
    only the customers in service aged, each by ``elapsed / #served``; the
    served set is the minimum-age set for FB (the non-initiator minimum for
    FB*, the head of line for FIFO); and the customer count changed by
    arrivals minus departures.
    """
    failures: list[str] = []
    for i in range(1, len(trace)):
        prev, cur = trace[i - 1], trace[i]
        tol = rtol * max(1.0, abs(cur.clock))
        elapsed = cur.clock - prev.clock
        if elapsed < -tol:
            _fail(failures, i, f"clock went backwards by {-elapsed}")

        before = sum(r - a for r, a in prev.customers)
        after = sum(r - a for r, a in cur.customers)
        served_time = elapsed if prev.queue_len > 0 else 0.0
        expected = before - served_time + cur.added
        if abs(after - expected) > tol:
            _fail(failures, i, f"work {after!r} != expected {expected!r}")

        arrived = 1 if cur.kind == "arrival" else 0
        if cur.queue_len != prev.queue_len + arrived - cur.departures:
            _fail(failures, i, "customer count does not reconcile")
        if cur.queue_len != len(cur.customers):
            _fail(failures, i, "queue_len disagrees with snapshot")

        prev_age = dict(prev.customers)
        cur_age = dict(cur.customers)
        served = set(prev.served)
        share = elapsed / len(served) if served else 0.0
        for req, age in cur_age.items():
            if req not in prev_age:
                continue
            grown = age - prev_age[req]
            want = share if req in served else 0.0
            if abs(grown - want) > tol:
                _fail(failures, i, f"customer {req!r} aged {grown!r}, expected {want!r}")

        if cur.customers:
            _check_served_set(failures, i, cur, discipline)
    return ConservationReport(not failures, max(len(trace) - 1, 0), tuple(failures))


def _check_served_set(failures, i, ev, discipline):
    served = set(ev.served)
    if discipline == "fifo":
        if list(ev.served) != [ev.customers[0][0]]:
            _fail(failures, i, "FIFO must serve the head of line")
        return
    pool = ev.customers
    if discipline == "fbstar" and len(pool) > 1:
        # the initiator is listed last and is excluded while others are present
        pool = pool[:-1]
    youngest = min(a for _, a in pool)
    expect = {r for r, a in pool if a == youngest}
    if served != expect:
        _fail(failures, i, "served set is not the least-attained-service set")
