"""Closed-form error predictors for the BF2 filter and design-space search.

False positives come from hash collisions: a row holding ``n`` events
answers a query for an absent key with probability ``(1 - exp(-n/W))**K``
(one bank per hash, so no ``K`` in the exponent).  Composing over ``D`` rows
and then over the 8 neighbour searches gives the filter-level rate, and
averaging over the observed distribution of events per row gives the
expected value for a real stream.

False negatives come from row clearing: an event loses its support when
the newest supporting event sits in the row being recycled.  The predictor
reads that mass off the distribution of support ages.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numba
import numpy as np

from .events import Label, LabeledStream
from .exceptions import HistogramError, LabelError

_TOL = 1e-9
FPR_LEVELS = ("bf2", "stcf")


def fpr_row(n_row, W, K):
    """Single-row false-positive probability with ``n_row`` stored events."""
    return (1.0 - np.exp(-np.asarray(n_row, dtype=float) / W)) ** K


def fpr_bf2(p_row, D):
    """Probability that at least one of ``D`` rows falsely reports a hit."""
    return 1.0 - (1.0 - np.asarray(p_row, dtype=float)) ** D


def fpr_stcf(p_bf2):
    """Probability that at least one of the 8 neighbour searches is a false hit."""
    return 1.0 - (1.0 - np.asarray(p_bf2, dtype=float)) ** 8


@dataclass(frozen=True)
class RateHistogram:
    """``probs[i]`` = probability that a ``tau_row`` bin holds ``i`` events."""

    probs: np.ndarray
    tau_row: int | None = None

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0 or np.any(p < 0) or abs(p.sum() - 1.0) > _TOL:
            raise HistogramError("rate histogram must be a non-negative pmf summing to 1")
        object.__setattr__(self, "probs", p)

    @classmethod
    def point_mass(cls, n: int, tau_row=None) -> "RateHistogram":
        p = np.zeros(n + 1)
        p[n] = 1.0
        return cls(p, tau_row)

    @property
    def mean(self) -> float:
        return float(np.dot(np.arange(self.probs.size), self.probs))


@dataclass(frozen=True)
class SupportHistogram:
    """Distribution of the age of each signal event's newest support.

    ``lags``/``probs`` give the mass at each observed age (us); ``p_none`` is
    the mass of events with no support within ``horizon``.
    """

    lags: np.ndarray
    probs: np.ndarray
    p_none: float
    horizon: int

    def __post_init__(self):
        lags = np.asarray(self.lags, dtype=np.int64)
        probs = np.asarray(self.probs, dtype=float)
        if lags.shape != probs.shape or np.any(probs < 0) or self.p_none < 0:
            raise HistogramError("malformed support histogram")
        if abs(probs.sum() + self.p_none - 1.0) > _TOL:
            raise HistogramError("support histogram mass must sum to 1")
        if lags.size and (lags.min() < 0 or lags.max() > self.horizon):
            raise HistogramError("support lags must lie in [0, horizon]")
        object.__setattr__(self, "lags", lags)
        object.__setattr__(self, "probs", probs)

    def mass_between(self, lo, hi) -> float:
        """Mass of lags in the half-open interval ``(lo, hi]``."""
        sel = (self.lags > lo) & (self.lags <= hi)
        return float(self.probs[sel].sum())


def weighted_fpr(hist: RateHistogram, W: int, D: int, K: int, level: str = "stcf") -> float:
    """Expected false-positive rate averaged over the events-per-row pmf."""
    if not isinstance(hist, RateHistogram):
        hist = RateHistogram(hist)
    if level not in FPR_LEVELS:
        raise ValueError(f"level must be one of {FPR_LEVELS}")
    n = np.arange(hist.probs.size)
    per = fpr_bf2(fpr_row(n, W, K), D)
    if level == "stcf":
        per = fpr_stcf(per)
    return float(np.dot(hist.probs, per))


def estimate_rate_histogram(stream: LabeledStream, tau_row: int) -> RateHistogram:
    """Histogram of events per consecutive ``tau_row`` bin, empty bins included."""
    if tau_row < 1:
        raise ValueError("tau_row must be >= 1")
    if len(stream) == 0:
        return RateHistogram.point_mass(0, tau_row)
    bins = (stream.t // np.uint64(tau_row)).astype(np.int64)
    per_bin = np.bincount(bins - bins[0])
    counts = np.bincount(per_bin)
    return RateHistogram(counts / counts.sum(), tau_row)


def query_time_fpr(stream: LabeledStream, W: int, D: int, K: int, tau_row: int,
                   mask=None) -> float:
    """Expected filter-level FPR using the row fills each search actually sees.

    Unlike :func:`weighted_fpr`, the active row counts only the events of
    its bin that arrived before the query, and each of the ``D`` rows gets
    its own fill.  Averaged over the events selected by ``mask`` (all by
    default).  Assumes uniform independent hashing.
    """
    if len(stream) == 0:
        return 0.0
    b = (stream.t // np.uint64(tau_row)).astype(np.int64)
    b -= b[0]
    per_bin = np.bincount(b)
    before = np.arange(b.size) - np.searchsorted(b, b)
    miss = 1.0 - fpr_row(before, W, K)
    for j in range(1, D):
        prev = b - j
        n = np.where(prev >= 0, per_bin[np.maximum(prev, 0)], 0)
        miss = miss * (1.0 - fpr_row(n, W, K))
    per_event = fpr_stcf(1.0 - miss)
    if mask is not None:
        per_event = per_event[np.asarray(mask, dtype=bool)]
    return float(per_event.mean()) if per_event.size else 0.0


@numba.njit(cache=True)
def _newest_support_kernel(xs, ys, ts, width, height, out):
    surf = np.full((height, width), -1, np.int64)
    for e in range(xs.shape[0]):
        x = xs[e]
        y = ys[e]
        newest = -1
        for ny in range(max(y - 1, 0), min(y + 2, height)):
            for nx in range(max(x - 1, 0), min(x + 2, width)):
                if (nx != x or ny != y) and surf[ny, nx] > newest:
                    newest = surf[ny, nx]
        out[e] = -1 if newest < 0 else ts[e] - newest
        surf[y, x] = ts[e]


def newest_support_age(stream: LabeledStream) -> np.ndarray:
    """Age (us) of every event's newest earlier 8-neighbour event, -1 if none."""
    out = np.empty(len(stream), dtype=np.int64)
    if len(stream):
        g = stream.geometry
        _newest_support_kernel(stream.x.astype(np.int64), stream.y.astype(np.int64),
                               stream.t.astype(np.int64), g.width, g.height, out)
    return out


def estimate_support_histogram(stream: LabeledStream, horizon: int) -> SupportHistogram:
    """Support-age distribution over ground-truth signal events.

    Events of either label count as support, as they do inside the filter.
    """
    if len(stream) and not stream.is_labeled:
        raise LabelError("support histogram needs a fully labelled stream")
    ages = newest_support_age(stream)[stream.labels == Label.SIGNAL]
    if ages.size == 0:
        return SupportHistogram(np.empty(0, np.int64), np.empty(0), 1.0, int(horizon))
    ok = (ages >= 0) & (ages <= horizon)
    lags, counts = np.unique(ages[ok], return_counts=True)
    probs = counts / ages.size
    return SupportHistogram(lags, probs, 1.0 - probs.sum(), int(horizon))


def fnr_predict(hist: SupportHistogram, D: int, tau_row: int, boundary: str = "bin") -> float:
    """Predicted false-negative rate for a ``D``-row filter with ``tau_row`` bins.

    ``boundary="bin"`` counts every event whose newest support is aged
    ``((D-1)*tau_row, D*tau_row]`` as lost.  ``boundary="phase"`` weights that
    last bin by the fraction of bin phases at which the support has actually
    been cleared, ``(age - (D-1)*tau_row) / tau_row``.  Support older than the
    window, or none at all, is always lost.
    """
    window = D * tau_row
    if hist.horizon < window:
        raise HistogramError(f"histogram horizon {hist.horizon}us shorter than window {window}us")
    lo = (D - 1) * tau_row
    beyond = hist.mass_between(window, hist.horizon) + hist.p_none
    if boundary == "bin":
        last = hist.mass_between(lo, window)
    elif boundary == "phase":
        sel = (hist.lags > lo) & (hist.lags <= window)
        last = float(np.dot(hist.probs[sel], (hist.lags[sel] - lo) / tau_row))
    else:
        raise ValueError("boundary must be 'bin' or 'phase'")
    return min(1.0, last + beyond)


def f1_predict(fnr: float, fpr: float, n_pos: int, n_neg: int) -> float:
    """F1 from rates and class sizes: ``2P(1-fnr) / (P(2-fnr) + N fpr)``."""
    if n_pos < 1:
        raise ValueError("need at least one signal event")
    return 2.0 * n_pos * (1.0 - fnr) / (n_pos * (2.0 - fnr) + n_neg * fpr)


def f1_from_confusion_identity(tp: int, fp: int, fn: int) -> float:
    denom = 2 * tp + fp + fn
    return math.nan if denom == 0 else 2.0 * tp / denom


@dataclass(frozen=True)
class PredictionReport:
    W: int
    D: int
    K: int
    tau_row: int
    fpr: float
    fnr: float
    f1: float

    @property
    def memory_bits(self) -> int:
        return self.W * self.D * self.K


def predict(sample: LabeledStream, W: int, D: int, K: int, tau_row: int,
            level: str = "stcf", boundary: str = "bin") -> PredictionReport:
    """Predicted FPR, FNR and F1 of one configuration on a labelled sample."""
    if not sample.is_labeled:
        raise LabelError("prediction needs a labelled sample")
    n_pos = sample.count(Label.SIGNAL)
    n_neg = sample.count(Label.NOISE)
    fpr = weighted_fpr(estimate_rate_histogram(sample, tau_row), W, D, K, level)
    fnr = fnr_predict(estimate_support_histogram(sample, D * tau_row), D, tau_row, boundary)
    return PredictionReport(W, D, K, tau_row, fpr, fnr, f1_predict(fnr, fpr, n_pos, n_neg))


def rank_reports(reports: Iterable[PredictionReport]) -> list[PredictionReport]:
    """Best predicted F1 first; ties go to smaller memory, then wider rows."""
    return sorted(reports, key=lambda r: (-r.f1, r.memory_bits, -r.W))


def dse_sweep(sample: LabeledStream, tau: int, K: int, configs: Sequence[tuple[int, int]],
              level: str = "stcf", boundary: str = "bin") -> list[PredictionReport]:
    """Predict every ``(W, D)`` in ``configs`` at correlation time ``tau``, ranked."""
    if not configs:
        raise ValueError("no configurations given")
    return rank_reports(predict(sample, W, D, K, int(tau) // D, level, boundary)
                        for W, D in configs)
