"""Per-replication random streams.

Splitting rule: an experiment seeded with ``seed`` owns two PCG64 generators,
seeded from ``SeedSequence(seed, spawn_key=(0,))`` (interarrival times) and
``SeedSequence(seed, spawn_key=(1,))`` (service uniforms).  Replication ``i``
reads each of them starting ``i * JUMP`` draws (mod 2**128) past its initial
state, with ``JUMP`` the golden-ratio increment also used by
``PCG64.jumped``.  Multiples of 2**64 must not be used: they leave the low
half of the LCG state unchanged and produce correlated substreams.  A
replication's output depends only on ``(seed, i)``, never on which worker
runs it or in which order.

Draws are buffered in blocks that grow geometrically, so short busy cycles
do not pay for a large block.
"""

from __future__ import annotations

import numpy as np

ARRIVAL_KEY = 0
SERVICE_KEY = 1
JUMP = 0x9E3779B97F4A7C15F39CC0605CEDC835
MOD = 1 << 128
FIRST_BLOCK = 16
MAX_BLOCK = 4096


class _Substreams:
    """Cached base generator for one (seed, key) pair."""

    _cache: dict = {}

    def __init__(self, seed: int, key: int):
        self.bitgen = np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(key,)))
        self.base_state = self.bitgen.state
        self.gen = np.random.Generator(self.bitgen)

    @classmethod
    def get(cls, seed: int, key: int) -> "_Substreams":
        k = (int(seed), key)
        sub = cls._cache.get(k)
        if sub is None:
            if len(cls._cache) > 64:
                cls._cache.clear()
            sub = cls._cache[k] = cls(seed, key)
        return sub

    def position(self, index: int) -> np.random.Generator:
        self.bitgen.state = self.base_state
        if index:
            self.bitgen.advance((index * JUMP) % MOD)
        return self.gen


class ArrivalStream:
    """Exponential interarrival times with rate ``lam`` for one replication."""

    def __init__(self, lam: float, seed: int, index: int):
        self._sub = _Substreams.get(seed, ARRIVAL_KEY)
        self._index = index
        self._state = None
        self._scale = 1.0 / lam
        self._block = FIRST_BLOCK
        self._buf: list[float] = []
        self._pos = 0

    def next(self) -> float:
        if self._pos == len(self._buf):
            self._refill()
        v = self._buf[self._pos]
        self._pos += 1
        return v

    def _refill(self):
        sub = self._sub
        if self._state is None:
            gen = sub.position(self._index)
        else:
            sub.bitgen.state = self._state
            gen = sub.gen
        self._buf = gen.exponential(self._scale, self._block).tolist()
        self._state = sub.bitgen.state
        self._pos = 0
        self._block = min(2 * self._block, MAX_BLOCK)


class ServiceStream:
    """Service times ``dist.sample(U)`` for uniforms ``U`` on [0, 1).

    With several distributions, :meth:`next_coupled` returns the uniform and
    one service time per distribution, all driven by the same ``U``.
    """

    def __init__(self, dists, seed: int, index: int):
        if not isinstance(dists, (list, tuple)):
            dists = (dists,)
        self._dists = tuple(dists)
        self._sub = _Substreams.get(seed, SERVICE_KEY)
        self._index = index
        self._state = None
        self._block = FIRST_BLOCK
        self._u: list[float] = []
        self._b: list[list[float]] = []
        self._pos = 0

    def _refill(self):
        sub = self._sub
        if self._state is None:
            gen = sub.position(self._index)
        else:
            sub.bitgen.state = self._state
            gen = sub.gen
        u = gen.random(self._block)
        self._state = sub.bitgen.state
        self._u = u.tolist()
        self._b = [d.sample_block(u).tolist() for d in self._dists]
        self._pos = 0
        self._block = min(2 * self._block, MAX_BLOCK)

    def next(self) -> float:
        if self._pos == len(self._u):
            self._refill()
        v = self._b[0][self._pos]
        self._pos += 1
        return v

    def next_coupled(self) -> tuple:
        if self._pos == len(self._u):
            self._refill()
        i = self._pos
        self._pos += 1
        return (self._u[i], *(b[i] for b in self._b))
