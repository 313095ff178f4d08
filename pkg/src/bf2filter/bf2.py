"""The BF2 structure: K banks of D time-binned rows of W bits.

Each row holds the events of one ``tau_row``-wide time bin, so the whole
array covers a sliding window of ``D * tau_row`` microseconds.  An event is
stored by setting bit ``hash_k(x, y)`` in the active row of every bank; a
search ANDs the addressed bit across banks, separately for each row.

Row rotation happens when time enters a new bin.  Two clearing policies:

``strict`` (default)
    every bin traversed since the previous update is cleared, at most all
    ``D`` rows, so nothing older than the window survives a time gap.
``literal``
    only the destination row is cleared and only when its index differs
    from the current pointer, exactly as the original insertion routine
    reads.  After a gap of a whole multiple of ``D`` bins stale rows stay.

Bits are packed into ``uint64`` words, so the state is ``K*W*D`` bits plus
a few scalars (rounded up to one word per row when ``W < 64``).
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .exceptions import ConfigError, OrderError
from .h3 import H3Family, is_power_of_two, new_family

CLEAR_MODES = ("strict", "literal")

# indices into the scalar state vector
_ROW_PTR, _LAST_BIN, _LAST_T, _INIT = range(4)


@dataclass(frozen=True)
class Bf2Config:
    W: int
    D: int
    K: int
    tau_row: int

    def __post_init__(self):
        if self.W < 2 or not is_power_of_two(self.W):
            raise ConfigError(f"W must be a power of two >= 2, got {self.W}")
        if self.D < 2:
            raise ConfigError(f"D must be >= 2, got {self.D}")
        if self.K < 1:
            raise ConfigError(f"K must be >= 1, got {self.K}")
        if self.tau_row < 1:
            raise ConfigError(f"tau_row must be >= 1 us, got {self.tau_row}")

    @classmethod
    def from_tau(cls, tau: int, W: int, D: int, K: int) -> "Bf2Config":
        """Split a correlation window ``tau`` into ``D`` rows of ``tau // D`` us."""
        if tau < D:
            raise ConfigError(f"tau={tau}us too short for D={D} rows")
        return cls(W=W, D=D, K=K, tau_row=int(tau) // D)

    @property
    def window(self) -> int:
        """Effective window ``D * tau_row`` in microseconds."""
        return self.D * self.tau_row

    @property
    def memory_bits(self) -> int:
        return self.K * self.W * self.D

    @property
    def words_per_row(self) -> int:
        return max(1, self.W // 64)


@dataclass(frozen=True)
class SearchResult:
    hits: np.ndarray  # bool, one flag per row (0-based)

    @property
    def any(self) -> bool:
        return bool(self.hits.any())

    def __getitem__(self, j):
        return bool(self.hits[j])


# -- numba kernels ------------------------------------------------------------

@numba.njit(cache=True)
def _advance(bits, st, t, tau_row, strict):
    D = bits.shape[1]
    b = t // tau_row
    if st[_INIT] == 0:
        st[_ROW_PTR] = b % D
        st[_LAST_BIN] = b
        st[_LAST_T] = t
        st[_INIT] = 1
        return
    st[_LAST_T] = t
    if strict:
        k = b - st[_LAST_BIN]
        if k > 0:
            n = min(k, D)
            for j in range(n):
                bits[:, (b - j) % D, :] = 0
            st[_LAST_BIN] = b
            st[_ROW_PTR] = b % D
    else:
        r = b % D
        if r != st[_ROW_PTR]:
            bits[:, r, :] = 0
            st[_ROW_PTR] = r
        st[_LAST_BIN] = b


@numba.njit(cache=True)
def _row_hit(bits, idx, row):
    for k in range(bits.shape[0]):
        h = idx[k]
        if (bits[k, row, h >> 6] >> np.uint64(h & 63)) & np.uint64(1) == 0:
            return False
    return True


@numba.njit(cache=True)
def _set_bits(bits, idx, row):
    for k in range(bits.shape[0]):
        h = idx[k]
        bits[k, row, h >> 6] |= np.uint64(1) << np.uint64(h & 63)


@numba.njit(cache=True)
def _stcf_kernel(xs, ys, ts, hx, hy, bits, st, tau_row, strict, s, width, height,
                 signal_out, support_out):
    K, D = bits.shape[0], bits.shape[1]
    idx = np.empty(K, np.int64)
    for e in range(xs.shape[0]):
        x = np.int64(xs[e])
        y = np.int64(ys[e])
        _advance(bits, st, np.int64(ts[e]), tau_row, strict)
        count = 0
        for dy in range(-1, 2):
            ny = y + dy
            if ny < 0 or ny >= height:
                continue
            for dx in range(-1, 2):
                nx = x + dx
                if (dx == 0 and dy == 0) or nx < 0 or nx >= width:
                    continue
                for k in range(K):
                    idx[k] = hx[k, nx] ^ hy[k, ny]
                for j in range(D):
                    if _row_hit(bits, idx, j):
                        count += 1
                        break
        support_out[e] = count
        signal_out[e] = count >= s
        for k in range(K):
            idx[k] = hx[k, x] ^ hy[k, y]
        _set_bits(bits, idx, st[_ROW_PTR])


# -- state object -------------------------------------------------------------

class Bf2:
    """Mutable BF2 state: bit store, row pointer and timing.

    Single writer: ``insert``/``advance_to`` must be serialized by the
    caller.
    """

    def __init__(self, config: Bf2Config, hash_seed: int = 1, clear_mode: str = "strict",
                 family: H3Family | None = None):
        if clear_mode not in CLEAR_MODES:
            raise ConfigError(f"clear_mode must be one of {CLEAR_MODES}, got {clear_mode!r}")
        self.config = config
        self.clear_mode = clear_mode
        self.family = family if family is not None else new_family(config.K, config.W, hash_seed)
        if (self.family.K, self.family.W) != (config.K, config.W):
            raise ConfigError("hash family does not match K/W of the configuration")
        self.bits = np.zeros((config.K, config.D, config.words_per_row), dtype=np.uint64)
        self._st = np.zeros(4, dtype=np.int64)

    @property
    def row_ptr(self) -> int:
        return int(self._st[_ROW_PTR])

    @property
    def initialized(self) -> bool:
        return bool(self._st[_INIT])

    @property
    def last_t(self) -> int | None:
        return int(self._st[_LAST_T]) if self.initialized else None

    @property
    def strict(self) -> bool:
        return self.clear_mode == "strict"

    @property
    def memory_bits(self) -> int:
        return self.config.memory_bits

    def _indices(self, x, y):
        f = self.family
        return (f.x_lookup[:, x] ^ f.y_lookup[:, y]).astype(np.int64)

    def _check_time(self, t):
        if t < 0:
            raise OrderError(f"negative timestamp {t}")
        if self.initialized and t < self._st[_LAST_T]:
            raise OrderError(f"timestamp {t} precedes last seen {int(self._st[_LAST_T])}")

    def advance_to(self, t: int) -> None:
        """Move the row pointer to the bin of ``t``, clearing expired rows."""
        t = int(t)
        self._check_time(t)
        _advance(self.bits, self._st, t, self.config.tau_row, self.strict)

    def insert(self, x: int, y: int, t: int) -> None:
        self.advance_to(t)
        _set_bits(self.bits, self._indices(x, y), self._st[_ROW_PTR])

    def search(self, x: int, y: int) -> SearchResult:
        idx = self._indices(x, y)
        hits = np.array([_row_hit(self.bits, idx, j) for j in range(self.config.D)], dtype=bool)
        return SearchResult(hits)

    def occupancy(self) -> np.ndarray:
        """``(K, D)`` matrix of set-bit counts per bank row."""
        return np.bitwise_count(self.bits).sum(axis=2).astype(np.int64)

    def clear(self) -> None:
        self.bits[:] = 0
        self._st[:] = 0

    def run_stcf(self, x, y, t, s: int, width: int, height: int):
        """Classify a whole (validated, time-ordered) event sequence in place.

        Returns ``(signal, support)`` arrays.  State carries over between
        calls, so a long stream can be fed in chunks.
        """
        n = len(x)
        signal = np.zeros(n, dtype=np.bool_)
        support = np.zeros(n, dtype=np.int64)
        if n:
            t = np.asarray(t, dtype=np.int64)
            if self.initialized and t[0] < self._st[_LAST_T]:
                raise OrderError("stream starts before the filter's last timestamp")
            _stcf_kernel(np.asarray(x, np.int64), np.asarray(y, np.int64), t,
                         self.family.x_lookup, self.family.y_lookup, self.bits, self._st,
                         self.config.tau_row, self.strict, s, width, height, signal, support)
        return signal, support


def new(config: Bf2Config, hash_seed: int = 1, clear_mode: str = "strict") -> Bf2:
    return Bf2(config, hash_seed=hash_seed, clear_mode=clear_mode)
