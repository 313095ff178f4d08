"""H3 universal hashing of pixel coordinates.

A coordinate pair is packed into a 32-bit key ``(x << 16) | y``.  Function
``i`` of the family owns a table of 32 random words, each ``index_bits``
wide; the hash of a key is the XOR of the table words selected by the key's
set bits.  The map is linear over XOR, which is what makes it cheap in
logic: no arithmetic, only AND/XOR trees.

Tables are drawn from SplitMix64 seeded with the family seed, so a
``(K, W, seed)`` triple always yields the same family.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from .exceptions import ConfigError

KEY_BITS = 32
_MASK64 = (1 << 64) - 1


def splitmix64(seed: int):
    """Yield the SplitMix64 sequence for ``seed`` (Steele, Lea & Flood 2014)."""
    state = seed & _MASK64
    while True:
        state = (state + 0x9E3779B97F4A7C15) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        yield z ^ (z >> 31)


def pack_key(x, y):
    return (np.asarray(x, dtype=np.uint32) << np.uint32(16)) | np.asarray(y, dtype=np.uint32)


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class H3Family:
    K: int
    W: int
    seed: int
    tables: np.ndarray = field(repr=False, compare=False)

    @property
    def index_bits(self) -> int:
        return self.W.bit_length() - 1

    def __eq__(self, other):
        if not isinstance(other, H3Family):
            return NotImplemented
        return (self.K, self.W, self.seed) == (other.K, other.W, other.seed) and \
            np.array_equal(self.tables, other.tables)

    def __hash__(self):
        return hash((self.K, self.W, self.seed))

    @cached_property
    def _lookup(self):
        # By linearity h(x<<16 | y) = h(x<<16) ^ h(y): one 64K-entry table per half.
        # The table for 2^(b+1) values is the one for 2^b values followed by itself XOR t[b].
        hx = np.zeros((self.K, 1), dtype=np.uint32)
        hy = np.zeros((self.K, 1), dtype=np.uint32)
        for b in range(16):
            hy = np.concatenate([hy, hy ^ self.tables[:, b:b + 1]], axis=1)
            hx = np.concatenate([hx, hx ^ self.tables[:, b + 16:b + 17]], axis=1)
        return hx, hy

    @property
    def x_lookup(self) -> np.ndarray:
        """``(K, 65536)`` table of hashes of ``x << 16``."""
        return self._lookup[0]

    @property
    def y_lookup(self) -> np.ndarray:
        return self._lookup[1]

    def hash(self, i: int, x: int, y: int) -> int:
        return hash_xy(self, i, x, y)

    def hash_key(self, i: int, key: int) -> int:
        """Reference evaluation: XOR of the table rows picked by the set bits of ``key``."""
        h = 0
        row = self.tables[i]
        b = 0
        while key:
            if key & 1:
                h ^= int(row[b])
            key >>= 1
            b += 1
        return h

    def hash_many(self, i: int, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=np.int64)
        y = np.asarray(y, dtype=np.int64)
        return self.x_lookup[i][x] ^ self.y_lookup[i][y]


@lru_cache(maxsize=64)
def new_family(K: int, W: int, seed: int) -> H3Family:
    """Build (or reuse; families are immutable) the ``(K, W, seed)`` family."""
    if K < 1:
        raise ConfigError(f"K must be >= 1, got {K}")
    if W < 2 or not is_power_of_two(W):
        raise ConfigError(f"W must be a power of two >= 2, got {W}")
    mask = W - 1
    gen = splitmix64(seed)
    tables = np.array([[next(gen) & mask for _ in range(KEY_BITS)] for _ in range(K)],
                      dtype=np.uint32)
    tables.setflags(write=False)
    return H3Family(K, W, seed, tables)


def hash_xy(family: H3Family, i: int, x: int, y: int) -> int:
    """Index in ``[0, W)`` of pixel ``(x, y)`` under function ``i``."""
    if not 0 <= i < family.K:
        raise IndexError(f"hash function {i} out of range for K={family.K}")
    if not (0 <= x <= 0xFFFF and 0 <= y <= 0xFFFF):
        raise ValueError("coordinates must fit in 16 bits")
    return family.hash_key(i, (x << 16) | y)
