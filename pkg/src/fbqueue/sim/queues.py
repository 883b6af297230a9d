"""Queue state machines for the FB, FB* and FIFO disciplines.

All three share a small protocol driven by an outer event loop:

``next_internal()``
    wall time until the next completion or group merge (``inf`` if idle);
``advance(dt)``
    serve for ``dt`` with ``dt`` not past that internal event;
``fire()``
    jump exactly to the pending internal event and apply it; returns the
    number of departures;
``arrive(req)``
    add a customer with total service requirement ``req``.

A customer is stored through its total requirement; remaining work is
``req - age``.  In FB the customers with the smallest age form the youngest
*group* and share the server, each aging at rate ``1/m`` for ``m`` members.
Groups only reach equal ages through a merge event, which sets the age to the
older group's value exactly, so no tolerance comparisons are ever made.
"""

from __future__ import annotations

import math
from collections import deque
from heapq import heappop, heappush

INF = math.inf

COMPLETION = "completion"
MERGE = "merge"
ARRIVAL = "arrival"


class FBQueue:
    """Foreground-Background: serve the least-attained-service group."""

    discipline = "fb"

    def __init__(self):
        # oldest first; each entry is [age, heap of requirements]
        self.groups: list[list] = []
        self.n = 0
        self._pending = None

    def next_internal(self) -> float:
        groups = self.groups
        if not groups:
            self._pending = None
            return INF
        g = groups[-1]
        age = g[0]
        reqs = g[1]
        m = len(reqs)
        dc = m * (reqs[0] - age)
        if len(groups) > 1:
            dm = m * (groups[-2][0] - age)
            if dm < dc:
                self._pending = MERGE
                return dm
        self._pending = COMPLETION
        return dc

    def advance(self, dt: float) -> None:
        groups = self.groups
        if not groups or dt <= 0.0:
            return
        g = groups[-1]
        reqs = g[1]
        age = g[0] + dt / len(reqs)
        cap = reqs[0]
        if len(groups) > 1 and groups[-2][0] < cap:
            cap = groups[-2][0]
        g[0] = age if age < cap else cap

    def fire(self) -> int:
        if self._pending is None:
            self.next_internal()
        kind = self._pending
        self._pending = None
        groups = self.groups
        g = groups[-1]
        if kind == COMPLETION:
            reqs = g[1]
            r = reqs[0]
            g[0] = r
            gone = 0
            while reqs and reqs[0] == r:
                heappop(reqs)
                gone += 1
            if not reqs:
                groups.pop()
            elif len(groups) > 1 and groups[-2][0] == r:
                # survivors have caught up with the next group at this instant
                self._merge_top()
            self.n -= gone
            return gone
        self._merge_top()
        return 0

    def _merge_top(self) -> None:
        """Merge the youngest group into the next older one."""
        groups = self.groups
        g = groups.pop()
        older = groups[-1]
        small, big = g[1], older[1]
        if len(small) > len(big):
            small, big = big, small
        for r in small:
            heappush(big, r)
        older[1] = big

    def arrive(self, req: float) -> None:
        groups = self.groups
        if groups and groups[-1][0] == 0.0:
            heappush(groups[-1][1], req)
        else:
            groups.append([0.0, [req]])
        self.n += 1
        self._pending = None

    @property
    def pending(self):
        """Kind of the internal event found by the last ``next_internal`` call."""
        return self._pending

    # --- inspection ---------------------------------------------------------
    def customers(self) -> list[tuple[float, float]]:
        """``(requirement, age)`` of everyone present, youngest group first."""
        out = []
        for age, reqs in reversed(self.groups):
            out.extend((r, age) for r in sorted(reqs))
        return out

    def served(self) -> list[float]:
        """Requirements of the customers currently receiving service."""
        if not self.groups:
            return []
        return sorted(self.groups[-1][1])

    def workload(self) -> float:
        return sum(r - a for r, a in self.customers())

    def count_younger_than(self, c: float) -> int:
        return sum(len(reqs) for age, reqs in self.groups if age < c)


class FBStarQueue(FBQueue):
    """FB in which the customer that opens a busy period has lowest priority.

    The initiator is served only while no other customer is present.  Every
    arrival that interrupts its service starts a sub-busy period; their count
    and per-period maxima (including the initiator) are recorded.
    """

    discipline = "fbstar"

    def __init__(self):
        super().__init__()
        self.initiator = None  # [age, req]
        self.k_subbusy = 0
        self.sub_maxima: list[int] = []
        self.first_service = None
        self._sub_max = 0

    def next_internal(self) -> float:
        if self.groups:
            return super().next_internal()
        if self.initiator is None:
            self._pending = None
            return INF
        self._pending = "initiator"
        return self.initiator[1] - self.initiator[0]

    def advance(self, dt: float) -> None:
        if self.groups:
            super().advance(dt)
        elif self.initiator is not None and dt > 0.0:
            age = self.initiator[0] + dt
            req = self.initiator[1]
            self.initiator[0] = age if age < req else req

    def fire(self) -> int:
        if self._pending is None:
            self.next_internal()
        if self._pending == "initiator":
            self._pending = None
            self.initiator = None
            self.n -= 1
            return 1
        gone = super().fire()
        if not self.groups and self.initiator is not None and gone:
            self.sub_maxima.append(self._sub_max)
        return gone

    def arrive(self, req: float) -> None:
        if self.n == 0:
            self.initiator = [0.0, req]
            self.first_service = req
            self.n = 1
            self._pending = None
            return
        opening = not self.groups
        super().arrive(req)
        if opening:
            self.k_subbusy += 1
            self._sub_max = self.n
        elif self.n > self._sub_max:
            self._sub_max = self.n

    def reset_cycle_stats(self) -> None:
        self.k_subbusy = 0
        self.sub_maxima = []
        self._sub_max = 0

    def customers(self):
        out = super().customers()
        if self.initiator is not None:
            out.append((self.initiator[1], self.initiator[0]))
        return out

    def served(self):
        if self.groups:
            return super().served()
        if self.initiator is not None:
            return [self.initiator[1]]
        return []

    def count_younger_than(self, c):
        extra = 1 if self.initiator is not None and self.initiator[0] < c else 0
        return super().count_younger_than(c) + extra


class FIFOQueue:
    """First-in first-out, non-preemptive single server."""

    discipline = "fifo"

    def __init__(self):
        self.line: deque = deque()
        self.head_age = 0.0
        self.n = 0

    def next_internal(self) -> float:
        if not self.line:
            return INF
        return self.line[0] - self.head_age

    def advance(self, dt: float) -> None:
        if self.line and dt > 0.0:
            age = self.head_age + dt
            req = self.line[0]
            self.head_age = age if age < req else req

    @property
    def pending(self):
        return COMPLETION if self.line else None

    def fire(self) -> int:
        self.line.popleft()
        self.head_age = 0.0
        self.n -= 1
        return 1

    def arrive(self, req: float) -> None:
        self.line.append(req)
        self.n += 1

    def customers(self):
        out = []
        for i, r in enumerate(self.line):
            out.append((r, self.head_age if i == 0 else 0.0))
        return out

    def served(self):
        return [self.line[0]] if self.line else []

    def workload(self):
        return sum(r - a for r, a in self.customers())

    def count_younger_than(self, c):
        return sum(1 for _, a in self.customers() if a < c)


QUEUES = {"fb": FBQueue, "fbstar": FBStarQueue, "fifo": FIFOQueue}


def make_queue(discipline: str):
    try:
        return QUEUES[discipline.lower()]()
    except KeyError:
        raise ValueError(f"unknown discipline {discipline!r}; choose from {sorted(QUEUES)}") from None
