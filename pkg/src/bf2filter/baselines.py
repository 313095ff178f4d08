"""Reference implementations of the comparison filters.

* BAF: time surface, signal iff any 8-neighbour fired within ``tau``.
* Guo-STCF: same surface, signal iff at least ``s`` 8-neighbours did.
* ONF: one cell per sensor row and per column holding the latest event of
  that line; support is looked up in rows ``y-1..y+1`` and columns
  ``x-1..x+1``.
* HashHeat: k locality-sensitive hashes of ``(x, y, t)`` into a saturating
  counter array that is wiped every ``N`` events.  The k counters read are
  combined by their minimum (default) or sum and compared with ``thr``.

All take a validated :class:`~bf2filter.events.LabeledStream` and return a
:class:`~bf2filter.stcf.Classification`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .events import LabeledStream
from .exceptions import ConfigError
from .stcf import Classification

_NEVER = -1


@numba.njit(cache=True)
def _time_surface_kernel(xs, ys, ts, tau, s, width, height, signal, support):
    surf = np.full((height, width), _NEVER, np.int64)
    for e in range(xs.shape[0]):
        x = xs[e]
        y = ys[e]
        t = ts[e]
        count = 0
        for ny in range(max(y - 1, 0), min(y + 2, height)):
            for nx in range(max(x - 1, 0), min(x + 2, width)):
                if nx == x and ny == y:
                    continue
                last = surf[ny, nx]
                if last != _NEVER and t - last <= tau:
                    count += 1
        support[e] = count
        signal[e] = count >= s
        surf[y, x] = t


@numba.njit(cache=True)
def _onf_kernel(xs, ys, ts, ps, tau, width, height, signal, support):
    # row cells: (x, t, p) of the latest event in each row; column cells: (y, t, p)
    row_x = np.zeros(height, np.int64)
    row_t = np.full(height, _NEVER, np.int64)
    row_p = np.zeros(height, np.int64)
    col_y = np.zeros(width, np.int64)
    col_t = np.full(width, _NEVER, np.int64)
    col_p = np.zeros(width, np.int64)
    for e in range(xs.shape[0]):
        x = xs[e]
        y = ys[e]
        t = ts[e]
        count = 0
        for ry in range(max(y - 1, 0), min(y + 2, height)):
            if row_t[ry] != _NEVER and t - row_t[ry] <= tau:
                sx = row_x[ry]
                if abs(sx - x) <= 1 and not (sx == x and ry == y):
                    count += 1
        for cx in range(max(x - 1, 0), min(x + 2, width)):
            if col_t[cx] != _NEVER and t - col_t[cx] <= tau:
                sy = col_y[cx]
                if abs(sy - y) <= 1 and not (cx == x and sy == y):
                    count += 1
        support[e] = count
        signal[e] = count >= 1
        row_x[y] = x
        row_t[y] = t
        row_p[y] = ps[e]
        col_y[x] = y
        col_t[x] = t
        col_p[x] = ps[e]


@numba.njit(cache=True)
def _hashheat_kernel(xs, ys, ts, coef, w, m, cell_max, thr, reset_every, use_sum, signal, support):
    k = coef.shape[0]
    cells = np.zeros(m, np.int64)
    idx = np.empty(k, np.int64)
    for e in range(xs.shape[0]):
        if e > 0 and e % reset_every == 0:
            cells[:] = 0
        x = float(xs[e])
        y = float(ys[e])
        t = float(ts[e])
        agg = 0 if use_sum else cell_max + 1
        for i in range(k):
            h = np.floor((coef[i, 0] * x + coef[i, 1] * y + coef[i, 2] * t + coef[i, 3]) / w)
            j = np.int64(h) % m
            idx[i] = j
            if use_sum:
                agg += cells[j]
            else:
                agg = min(agg, cells[j])
        support[e] = agg
        signal[e] = agg >= thr
        for i in range(k):
            if cells[idx[i]] < cell_max:
                cells[idx[i]] += 1


def _columns(stream: LabeledStream):
    return (stream.x.astype(np.int64), stream.y.astype(np.int64), stream.t.astype(np.int64))


def _outputs(n):
    return np.zeros(n, dtype=np.bool_), np.zeros(n, dtype=np.int64)


def guo_stcf_classify_stream(stream: LabeledStream, tau: int, s: int = 2) -> Classification:
    if not 1 <= s <= 8:
        raise ConfigError(f"s must be in [1, 8], got {s}")
    if tau < 0:
        raise ConfigError("tau must be non-negative")
    signal, support = _outputs(len(stream))
    if len(stream):
        g = stream.geometry
        _time_surface_kernel(*_columns(stream), int(tau), int(s), g.width, g.height, signal, support)
    return Classification(signal, support)


def baf_classify_stream(stream: LabeledStream, tau: int) -> Classification:
    return guo_stcf_classify_stream(stream, tau, s=1)


def onf_classify_stream(stream: LabeledStream, tau: int) -> Classification:
    if tau < 0:
        raise ConfigError("tau must be non-negative")
    signal, support = _outputs(len(stream))
    if len(stream):
        g = stream.geometry
        _onf_kernel(*_columns(stream), stream.p.astype(np.int64), int(tau), g.width, g.height,
                    signal, support)
    return Classification(signal, support)


@dataclass(frozen=True)
class HashHeatParams:
    k: int = 4
    m: int = 4096
    cell_width: int = 8
    w: float = 1024.0
    thr: int = 1
    N: int = 10_000
    aggregate: str = "min"

    def __post_init__(self):
        if self.aggregate not in ("min", "sum"):
            raise ConfigError("HashHeat aggregate must be 'min' or 'sum'")
        for name in ("k", "m", "cell_width", "N"):
            if getattr(self, name) < 1:
                raise ConfigError(f"HashHeat {name} must be >= 1")
        if self.w < 1:
            raise ConfigError("HashHeat segment length w must be >= 1")

    @property
    def cell_max(self) -> int:
        return (1 << self.cell_width) - 1

    def coefficients(self, seed: int) -> np.ndarray:
        """``(k, 4)`` array of a, b, c, d drawn uniformly from [0, 1)."""
        return np.random.default_rng(seed).random((self.k, 4))


def hashheat_classify_stream(stream: LabeledStream, params: HashHeatParams = HashHeatParams(),
                             seed: int = 1) -> Classification:
    """The ``support`` array holds the aggregate (min or sum) of the cells read."""
    signal, support = _outputs(len(stream))
    if len(stream):
        _hashheat_kernel(*_columns(stream), params.coefficients(seed), float(params.w), params.m,
                         params.cell_max, params.thr, params.N, params.aggregate == "sum",
                         signal, support)
    return Classification(signal, support)
