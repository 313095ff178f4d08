"""Confusion counts, error rates, ROC sweeps and AUC.

Signal is the positive class.  Rates whose denominator is empty come back
as NaN rather than 0 so an absent class is never mistaken for a perfect
score.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from sklearn.base import clone

from .events import Label, LabeledStream
from .exceptions import ConfigError, LabelError, LengthError


@dataclass(frozen=True)
class ConfusionCounts:
    TP: int
    FP: int
    TN: int
    FN: int

    @property
    def n_pos(self) -> int:
        return self.TP + self.FN

    @property
    def n_neg(self) -> int:
        return self.FP + self.TN

    @property
    def total(self) -> int:
        return self.n_pos + self.n_neg


class Rates(NamedTuple):
    fpr: float
    fnr: float
    tpr: float
    precision: float
    recall: float
    f1: float


def _ratio(num, den):
    return num / den if den else math.nan


def _signal_flags(x):
    if hasattr(x, "signal"):
        x = x.signal
    if isinstance(x, LabeledStream):
        if not x.is_labeled:
            raise LabelError("ground-truth stream is not fully labelled")
        return x.labels == Label.SIGNAL
    return np.asarray(x).astype(bool)


def confusion(predicted, truth) -> ConfusionCounts:
    """Count outcomes.

    ``predicted`` is a Classification or a bool/0-1 array; ``truth`` is a
    labelled stream or a bool/0-1 array of the same length.
    """
    pred = _signal_flags(predicted)
    gt = _signal_flags(truth)
    if pred.shape != gt.shape:
        raise LengthError(f"{pred.size} predictions for {gt.size} events")
    tp = int(np.count_nonzero(pred & gt))
    fp = int(np.count_nonzero(pred & ~gt))
    fn = int(np.count_nonzero(~pred & gt))
    return ConfusionCounts(tp, fp, pred.size - tp - fp - fn, fn)


def rates(c: ConfusionCounts) -> Rates:
    tpr = _ratio(c.TP, c.n_pos)
    denom = 2 * c.TP + c.FP + c.FN
    return Rates(
        fpr=_ratio(c.FP, c.n_neg),
        fnr=_ratio(c.FN, c.n_pos),
        tpr=tpr,
        precision=_ratio(c.TP, c.TP + c.FP),
        recall=tpr,
        f1=_ratio(2 * c.TP, denom),
    )


def default_tau_grid(n: int = 16, lo: float = 100.0, hi: float = 1e6) -> np.ndarray:
    """``n`` log-spaced correlation times (us), rounded to whole microseconds."""
    return np.round(np.logspace(np.log10(lo), np.log10(hi), n)).astype(np.int64)


def default_w_grid(n: int = 16, lo: float = 1.0, hi: float = 8192.0) -> np.ndarray:
    return np.logspace(np.log10(lo), np.log10(hi), n)


def auc(fpr: Sequence[float], tpr: Sequence[float]) -> float:
    """Trapezoidal area under ``(fpr, tpr)`` points plus the (0,0) and (1,1) anchors.

    Points are sorted by FPR; where several share an FPR the largest TPR is
    kept.
    """
    f = np.concatenate([[0.0], np.asarray(fpr, float), [1.0]])
    t = np.concatenate([[0.0], np.asarray(tpr, float), [1.0]])
    ok = ~(np.isnan(f) | np.isnan(t))
    f, t = f[ok], t[ok]
    uniq, inv = np.unique(f, return_inverse=True)
    best = np.full(uniq.size, -np.inf)
    np.maximum.at(best, inv, t)
    return float(np.trapezoid(best, uniq))


@dataclass(frozen=True)
class RocCurve:
    knob: str
    values: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float

    def points(self):
        """``(knob value, FPR, TPR)`` in grid order."""
        return list(zip(self.values.tolist(), self.fpr.tolist(), self.tpr.tolist()))


def roc_sweep(stream: LabeledStream, filter_kind, params_base: dict | None = None,
              grid: Sequence | None = None) -> RocCurve:
    """Run one fresh filter per grid value of its knob and collect (FPR, TPR).

    ``filter_kind`` is a filter name or an estimator (cloned per point).  The
    knob is ``tau`` for correlation filters and ``w`` for HashHeat.
    """
    from .estimators import EventFilter, make_filter
    if not stream.is_labeled:
        raise LabelError("ROC sweep needs a labelled stream")
    base = make_filter(filter_kind, **(params_base or {})) if isinstance(filter_kind, str) \
        else filter_kind
    if not isinstance(base, EventFilter):
        raise ConfigError("filter must be a filter name or an EventFilter")
    knob = base.knob
    if grid is None:
        grid = default_w_grid() if knob == "w" else default_tau_grid()
    grid = np.asarray(grid)
    if grid.size == 0:
        raise ConfigError("empty sweep grid")
    truth = stream.labels == Label.SIGNAL
    fprs, tprs = [], []
    for v in grid:
        est = clone(base).set_params(**{knob: v.item()})
        r = rates(confusion(est.fit(stream).classify(stream), truth))
        fprs.append(r.fpr)
        tprs.append(r.tpr)
    fprs, tprs = np.array(fprs), np.array(tprs)
    return RocCurve(knob, grid, fprs, tprs, auc(fprs, tprs))
