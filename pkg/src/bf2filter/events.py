"""Event data model, on-disk formats and signal/noise mixing.

Streams are held as numpy structured arrays (``EVENT_DTYPE``) wrapped in a
:class:`LabeledStream` together with the sensor geometry.  Two file formats
are supported:

* CSV with header ``x,y,t,p[,label]`` (label 1 = signal, 0 = noise).  Lines
  starting with ``#`` are comments; ``# geometry=CxR`` is honoured.
* A little-endian binary format: 16-byte header (magic ``BF2E``, u16
  version, u16 width, u16 height, 6 reserved bytes) followed by 16-byte
  records (u16 x, u16 y, u64 t, u8 p, u8 label, 2 pad bytes).
"""
from __future__ import annotations

import enum
import io
import struct
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .exceptions import GeometryError, OrderError, ParseError, StreamIOError

UNLABELED = 255

EVENT_DTYPE = np.dtype([("x", "<u2"), ("y", "<u2"), ("t", "<u8"), ("p", "u1"), ("label", "u1")])

_RECORD_DTYPE = np.dtype(
    [("x", "<u2"), ("y", "<u2"), ("t", "<u8"), ("p", "u1"), ("label", "u1"), ("pad", "V2")]
)
_MAGIC = b"BF2E"
_VERSION = 1
_HEADER = struct.Struct("<4sHHH6x")
assert _HEADER.size == 16 and _RECORD_DTYPE.itemsize == 16


class Label(enum.IntEnum):
    NOISE = 0
    SIGNAL = 1


@dataclass(frozen=True)
class SensorGeometry:
    width: int
    height: int

    def __post_init__(self):
        if self.width < 3 or self.height < 3:
            raise GeometryError(f"sensor must be at least 3x3, got {self.width}x{self.height}")
        if self.width > 0xFFFF or self.height > 0xFFFF:
            raise GeometryError("sensor dimensions must fit in 16 bits")

    @classmethod
    def parse(cls, text: str) -> "SensorGeometry":
        """Parse ``"346x260"`` (width x height)."""
        try:
            w, h = text.lower().split("x")
            return cls(int(w), int(h))
        except ValueError as exc:
            if isinstance(exc, GeometryError):
                raise
            raise GeometryError(f"bad geometry {text!r}, expected WIDTHxHEIGHT") from None

    @property
    def n_pixels(self) -> int:
        return self.width * self.height

    def __str__(self):
        return f"{self.width}x{self.height}"


@dataclass(frozen=True)
class Event:
    x: int
    y: int
    t: int
    p: int = 1
    label: Optional[Label] = None


@dataclass(eq=False)
class LabeledStream:
    """A time-ordered event stream over a known sensor geometry."""

    geometry: SensorGeometry
    events: np.ndarray = field(default_factory=lambda: np.empty(0, EVENT_DTYPE))

    def __post_init__(self):
        if self.events.dtype != EVENT_DTYPE:
            self.events = self.events.astype(EVENT_DTYPE)

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        for rec in self.events:
            lab = int(rec["label"])
            yield Event(int(rec["x"]), int(rec["y"]), int(rec["t"]), int(rec["p"]),
                        None if lab == UNLABELED else Label(lab))

    def __eq__(self, other):
        if not isinstance(other, LabeledStream):
            return NotImplemented
        return self.geometry == other.geometry and np.array_equal(self.events, other.events)

    @property
    def x(self):
        return self.events["x"]

    @property
    def y(self):
        return self.events["y"]

    @property
    def t(self):
        return self.events["t"]

    @property
    def p(self):
        return self.events["p"]

    @property
    def labels(self):
        return self.events["label"]

    @property
    def is_labeled(self) -> bool:
        return len(self.events) == 0 or bool(np.all(self.events["label"] != UNLABELED))

    def signal_mask(self) -> np.ndarray:
        return self.events["label"] == Label.SIGNAL

    def count(self, label: Label) -> int:
        return int(np.count_nonzero(self.events["label"] == label))

    def relabel(self, label: Optional[Label]) -> "LabeledStream":
        ev = self.events.copy()
        ev["label"] = UNLABELED if label is None else int(label)
        return LabeledStream(self.geometry, ev)

    def subset(self, mask) -> "LabeledStream":
        return LabeledStream(self.geometry, self.events[mask])


def make_events(x, y, t, p=None, label=None) -> np.ndarray:
    """Build an ``EVENT_DTYPE`` array from column arrays."""
    x = np.asarray(x)
    ev = np.empty(len(x), EVENT_DTYPE)
    ev["x"] = x
    ev["y"] = y
    ev["t"] = t
    ev["p"] = 1 if p is None else p
    ev["label"] = UNLABELED if label is None else label
    return ev


def from_events(geometry: SensorGeometry, events: Iterable[Event]) -> LabeledStream:
    events = list(events)
    return LabeledStream(geometry, make_events(
        [e.x for e in events], [e.y for e in events], [e.t for e in events],
        [e.p for e in events],
        [UNLABELED if e.label is None else int(e.label) for e in events],
    ))


def validate(stream: LabeledStream, sort: bool = False) -> LabeledStream:
    """Check geometry bounds, polarity/label domains and time order.

    With ``sort=True`` an unsorted stream is stably sorted by timestamp
    instead of raising :class:`OrderError`.
    """
    ev = stream.events
    g = stream.geometry
    if len(ev):
        bad = np.flatnonzero((ev["x"] >= g.width) | (ev["y"] >= g.height))
        if bad.size:
            i = bad[0]
            raise GeometryError(
                f"event {i} at ({ev['x'][i]},{ev['y'][i]}) outside {g}")
        if np.any(ev["p"] > 1):
            raise ParseError("polarity must be 0 or 1")
        lab = ev["label"]
        if np.any((lab > 1) & (lab != UNLABELED)):
            raise ParseError("label must be 0, 1 or unlabeled")
        dec = np.flatnonzero(np.diff(ev["t"].astype(np.int64)) < 0)
        if dec.size:
            if not sort:
                raise OrderError(f"timestamp decreases at event {dec[0] + 1}")
            ev = ev[np.argsort(ev["t"], kind="stable")]
    return LabeledStream(g, ev)


def mix_streams(signal: LabeledStream, noise: LabeledStream) -> LabeledStream:
    """Merge two streams, labelling their events Signal and Noise.

    Ties on timestamp put signal events first; within each source the input
    order is kept.
    """
    if signal.geometry != noise.geometry:
        raise GeometryError(f"geometry mismatch: {signal.geometry} vs {noise.geometry}")
    s = signal.events.copy()
    n = noise.events.copy()
    s["label"] = Label.SIGNAL
    n["label"] = Label.NOISE
    both = np.concatenate([s, n])
    order = np.argsort(both["t"], kind="stable")
    return LabeledStream(signal.geometry, both[order])


# -- file formats -------------------------------------------------------------

def _infer_format(path, fmt):
    if fmt:
        return fmt
    return "binary" if str(path).endswith((".bin", ".bf2e")) else "csv"


def save_stream(stream: LabeledStream, path, fmt: Optional[str] = None, comment: Optional[str] = None):
    fmt = _infer_format(path, fmt)
    try:
        if fmt == "binary":
            rec = np.zeros(len(stream), _RECORD_DTYPE)
            for name in ("x", "y", "t", "p", "label"):
                rec[name] = stream.events[name]
            with open(path, "wb") as fh:
                fh.write(_HEADER.pack(_MAGIC, _VERSION, stream.geometry.width, stream.geometry.height))
                fh.write(rec.tobytes())
        elif fmt == "csv":
            with open(path, "w", newline="") as fh:
                fh.write(format_csv(stream, comment=comment))
        else:
            raise ValueError(f"unknown format {fmt!r}")
    except OSError as exc:
        raise StreamIOError(f"cannot write {path}: {exc}") from exc


def format_csv(stream: LabeledStream, extra: Optional[dict] = None, comment: Optional[str] = None) -> str:
    """Render a stream as CSV text; ``extra`` adds named integer columns."""
    ev = stream.events
    labeled = len(ev) > 0 and stream.is_labeled
    cols = [ev["x"], ev["y"], ev["t"], ev["p"]]
    header = ["x", "y", "t", "p"]
    if labeled:
        cols.append(ev["label"])
        header.append("label")
    for name, values in (extra or {}).items():
        cols.append(np.asarray(values))
        header.append(name)
    buf = io.StringIO()
    if comment:
        for line in comment.splitlines():
            buf.write(f"# {line}\n")
    buf.write(f"# geometry={stream.geometry}\n")
    buf.write(",".join(header) + "\n")
    if len(ev):
        table = np.column_stack([c.astype(np.uint64) for c in cols])
        np.savetxt(buf, table, fmt="%d", delimiter=",")
    return buf.getvalue()


def read_csv_columns(path):
    """Read an event CSV into ``(columns, geometry_or_None)``.

    ``columns`` maps each header name to a uint64 array.
    """
    geometry = None
    header = None
    rows = []
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise StreamIOError(f"cannot read {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("geometry="):
                    geometry = SensorGeometry.parse(body.split("=", 1)[1])
                continue
            if header is None:
                header = [h.strip() for h in line.split(",")]
                if header[:4] != ["x", "y", "t", "p"]:
                    raise ParseError(f"{path}:{lineno}: header must start with x,y,t,p")
                continue
            parts = line.split(",")
            if len(parts) != len(header):
                raise ParseError(f"{path}:{lineno}: expected {len(header)} fields, got {len(parts)}")
            try:
                rows.append([int(v) for v in parts])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-integer field in {line!r}") from None
    if header is None:
        raise ParseError(f"{path}: missing header")
    arr = np.array(rows, dtype=np.int64).reshape(-1, len(header))
    if np.any(arr < 0):
        raise ParseError(f"{path}: negative field")
    return {name: arr[:, i].astype(np.uint64) for i, name in enumerate(header)}, geometry


def load_stream(path, fmt: Optional[str] = None, geometry: Optional[SensorGeometry] = None,
                sort: bool = False) -> LabeledStream:
    """Load and validate an event file.

    For CSV the geometry comes from the argument or, failing that, from a
    ``# geometry=`` comment.  For binary files it is read from the header
    (a given ``geometry`` must then agree).
    """
    fmt = _infer_format(path, fmt)
    if fmt == "binary":
        try:
            with open(path, "rb") as fh:
                raw = fh.read()
        except OSError as exc:
            raise StreamIOError(f"cannot read {path}: {exc}") from exc
        if len(raw) < 16:
            raise ParseError(f"{path}: truncated header")
        magic, version, w, h = _HEADER.unpack_from(raw)
        if magic != _MAGIC:
            raise ParseError(f"{path}: bad magic {magic!r}")
        if version != _VERSION:
            raise ParseError(f"{path}: unsupported version {version}")
        if (len(raw) - 16) % 16:
            raise ParseError(f"{path}: trailing partial record")
        file_geom = SensorGeometry(w, h)
        if geometry is not None and geometry != file_geom:
            raise GeometryError(f"{path}: header geometry {file_geom} != requested {geometry}")
        rec = np.frombuffer(raw, _RECORD_DTYPE, offset=16)
        ev = np.empty(len(rec), EVENT_DTYPE)
        for name in ("x", "y", "t", "p", "label"):
            ev[name] = rec[name]
        return validate(LabeledStream(file_geom, ev), sort=sort)
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    cols, file_geom = read_csv_columns(path)
    geom = geometry or file_geom
    if geom is None:
        raise GeometryError(f"{path}: geometry required for CSV input")
    for name in ("x", "y"):
        if np.any(cols[name] > 0xFFFF):
            raise GeometryError(f"{path}: {name} coordinate exceeds 16 bits")
    label = cols.get("label")
    if label is not None and np.any(label > 1):
        raise ParseError(f"{path}: label must be 0 or 1")
    ev = make_events(cols["x"], cols["y"], cols["t"],
                     np.minimum(cols["p"], 255), label if label is not None else None)
    return validate(LabeledStream(geom, ev), sort=sort)
