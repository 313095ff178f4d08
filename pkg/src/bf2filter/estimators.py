"""scikit-learn style wrappers around the event filters.

Every filter is an estimator whose "samples" are events.  ``X`` is either a
:class:`~bf2filter.events.LabeledStream` or an ``(n, 3..5)`` integer array
with columns ``x, y, t[, p[, label]]``.  Filters hold no learned
parameters: ``fit`` only validates the input and records the sensor
geometry, and every ``predict`` call runs a fresh filter over ``X`` in
order.

    >>> f = Bf2Filter(tau=5000).fit(stream)
    >>> keep = f.predict(stream)          # 1 = signal, 0 = noise
    >>> clean = f.transform(stream)       # signal events only
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import baselines, stcf
from .events import UNLABELED, Label, LabeledStream, SensorGeometry, make_events, validate
from .exceptions import ConfigError, GeometryError, LabelError, LengthError, ParseError

FILTER_KINDS = ("bf2", "baf", "guo", "onf", "hashheat")


def _as_geometry(geometry):
    if geometry is None or isinstance(geometry, SensorGeometry):
        return geometry
    if isinstance(geometry, str):
        return SensorGeometry.parse(geometry)
    width, height = geometry
    return SensorGeometry(int(width), int(height))


def check_events(X, geometry=None, sort: bool = False) -> LabeledStream:
    """Coerce ``X`` to a validated, time-ordered :class:`LabeledStream`.

    Arrays need a geometry unless one can be taken from a stream; when
    none is given, the smallest sensor that holds every event is assumed.
    """
    geometry = _as_geometry(geometry)
    if isinstance(X, LabeledStream):
        if geometry is not None and geometry != X.geometry:
            raise GeometryError(f"stream geometry {X.geometry} differs from {geometry}")
        return validate(X, sort=sort)
    arr = np.asarray(X)
    if arr.ndim != 2 or not 3 <= arr.shape[1] <= 5:
        raise ParseError(f"expected an (n, 3..5) event array, got shape {arr.shape}")
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        if not np.all(np.isfinite(arr)) or np.any(arr != np.round(arr)):
            raise ParseError("event columns must hold integers")
    arr = arr.astype(np.int64)
    if arr.size and arr.min() < 0:
        raise ParseError("event columns must be non-negative")
    if geometry is None:
        if len(arr) == 0:
            raise GeometryError("cannot infer geometry from an empty array")
        geometry = SensorGeometry(max(3, int(arr[:, 0].max()) + 1), max(3, int(arr[:, 1].max()) + 1))
    p = arr[:, 3] if arr.shape[1] > 3 else None
    label = arr[:, 4] if arr.shape[1] > 4 else None
    if len(arr) and (arr[:, 0].max() > 0xFFFF or arr[:, 1].max() > 0xFFFF):
        raise GeometryError("coordinates exceed 16 bits")
    if label is not None and np.any((label > 1) & (label != UNLABELED)):
        raise ParseError("label must be 0, 1 or unlabeled")
    if p is not None and np.any(p > 1):
        raise ParseError("polarity must be 0 or 1")
    return validate(LabeledStream(geometry, make_events(arr[:, 0], arr[:, 1], arr[:, 2], p, label)),
                    sort=sort)


def _truth(stream: LabeledStream, y):
    if y is None:
        if not stream.is_labeled:
            raise LabelError("no y given and the stream is not fully labelled")
        return stream.labels == Label.SIGNAL
    y = np.asarray(y)
    if y.shape != (len(stream),):
        raise LengthError(f"y has shape {y.shape}, expected ({len(stream)},)")
    return y.astype(bool)


class EventFilter(TransformerMixin, BaseEstimator):
    """Common plumbing; subclasses implement ``_classify(stream)``.

    ``knob`` names the parameter an ROC sweep varies.
    """

    knob = "tau"
    kind = ""

    def fit(self, X, y=None):
        self._validate_params()
        stream = check_events(X, getattr(self, "geometry", None), sort=getattr(self, "sort", False))
        self.geometry_ = stream.geometry
        self.n_events_fit_ = len(stream)
        return self

    def _validate_params(self):
        pass

    def _stream(self, X) -> LabeledStream:
        check_is_fitted(self, "geometry_")
        return check_events(X, self.geometry_, sort=getattr(self, "sort", False))

    def classify(self, X) -> stcf.Classification:
        """Full per-event result (signal flags and support counts)."""
        return self._classify(self._stream(X))

    def predict(self, X) -> np.ndarray:
        return self.classify(X).labels

    def fit_predict(self, X, y=None) -> np.ndarray:
        return self.fit(X, y).predict(X)

    def transform(self, X):
        """Drop events classified as noise; output has the same form as ``X``."""
        stream = self._stream(X)
        keep = self._classify(stream).signal
        if isinstance(X, LabeledStream):
            return stream.subset(keep)
        arr = np.asarray(X)
        if getattr(self, "sort", False):
            return np.asarray(X)[np.argsort(arr[:, 2], kind="stable")][keep]
        return arr[keep]

    def score(self, X, y=None) -> float:
        """F1 of the signal class against ``y`` (or the stream's own labels)."""
        from .metrics import confusion, rates
        stream = self._stream(X)
        pred = self._classify(stream).signal
        return rates(confusion(pred, _truth(stream, y))).f1


class Bf2Filter(EventFilter):
    """Spatio-temporal correlation filter backed by a BF2 structure."""

    kind = "bf2"

    def __init__(self, tau=5000, s=1, W=16384, D=4, K=4, hash_seed=1, clear_mode="strict",
                 polarity_split=False, geometry=None, sort=False):
        self.tau = tau
        self.s = s
        self.W = W
        self.D = D
        self.K = K
        self.hash_seed = hash_seed
        self.clear_mode = clear_mode
        self.polarity_split = polarity_split
        self.geometry = geometry
        self.sort = sort

    @property
    def params_(self) -> stcf.StcfParams:
        return stcf.StcfParams(int(self.tau), int(self.s), int(self.W), int(self.D), int(self.K))

    def _validate_params(self):
        self.params_
        if self.clear_mode not in ("strict", "literal"):
            raise ConfigError(f"unknown clear mode {self.clear_mode!r}")

    def _classify(self, stream):
        return stcf.process_stream(stream, self.params_, hash_seed=self.hash_seed,
                                   clear_mode=self.clear_mode, polarity_split=self.polarity_split)


class GuoStcfFilter(EventFilter):
    """Time-surface filter needing ``s`` supporting neighbours."""

    kind = "guo"

    def __init__(self, tau=5000, s=2, geometry=None, sort=False):
        self.tau = tau
        self.s = s
        self.geometry = geometry
        self.sort = sort

    def _classify(self, stream):
        return baselines.guo_stcf_classify_stream(stream, int(self.tau), int(self.s))


class BafFilter(EventFilter):
    """Background-activity filter: one supporting neighbour within ``tau``."""

    kind = "baf"

    def __init__(self, tau=5000, geometry=None, sort=False):
        self.tau = tau
        self.geometry = geometry
        self.sort = sort

    def _classify(self, stream):
        return baselines.baf_classify_stream(stream, int(self.tau))


class OnfFilter(EventFilter):
    """Row/column latest-event filter with ``(R + C)`` cells."""

    kind = "onf"

    def __init__(self, tau=5000, geometry=None, sort=False):
        self.tau = tau
        self.geometry = geometry
        self.sort = sort

    def _classify(self, stream):
        return baselines.onf_classify_stream(stream, int(self.tau))


class HashHeatFilter(EventFilter):
    """Locality-sensitive hashing into saturating counters; ``w`` is the ROC knob."""

    kind = "hashheat"
    knob = "w"

    def __init__(self, k=4, m=4096, cell_width=8, w=1024.0, thr=1, N=10_000, aggregate="min",
                 seed=1, geometry=None, sort=False):
        self.k = k
        self.m = m
        self.cell_width = cell_width
        self.w = w
        self.thr = thr
        self.N = N
        self.aggregate = aggregate
        self.seed = seed
        self.geometry = geometry
        self.sort = sort

    @property
    def params_(self) -> baselines.HashHeatParams:
        return baselines.HashHeatParams(int(self.k), int(self.m), int(self.cell_width),
                                        float(self.w), int(self.thr), int(self.N), self.aggregate)

    def _validate_params(self):
        self.params_

    def _classify(self, stream):
        return baselines.hashheat_classify_stream(stream, self.params_, seed=self.seed)


_CLASSES = {"bf2": Bf2Filter, "baf": BafFilter, "guo": GuoStcfFilter, "onf": OnfFilter,
            "hashheat": HashHeatFilter}


def make_filter(kind: str, **params) -> EventFilter:
    """Construct a filter estimator by name (one of :data:`FILTER_KINDS`)."""
    try:
        cls = _CLASSES[kind]
    except KeyError:
        raise ConfigError(f"unknown filter {kind!r}; choose from {FILTER_KINDS}") from None
    return cls(**params)
