"""Synthetic labelled streams: uncorrelated shot noise and moving edges."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .events import Label, LabeledStream, SensorGeometry, make_events
from .exceptions import ConfigError

DEFAULT_NOISE_HZ = 5.0


def _sorted_stream(geometry, x, y, t, p, label):
    order = np.lexsort((y, x, t))
    return LabeledStream(geometry, make_events(x[order], y[order], t[order], p[order], label))


@dataclass(frozen=True)
class NoiseSpec:
    geometry: SensorGeometry
    rate_hz: float = DEFAULT_NOISE_HZ
    duration_us: int = 1_000_000
    seed: int = 0

    def __post_init__(self):
        if self.rate_hz < 0:
            raise ConfigError("noise rate must be >= 0")
        if self.duration_us < 0:
            raise ConfigError("duration must be >= 0")


def gen_shot_noise(spec: NoiseSpec) -> LabeledStream:
    """Independent homogeneous Poisson process at every pixel.

    Equivalent construction: a Poisson total count, then uniform pixel and
    uniform time per event.
    """
    g = spec.geometry
    rng = np.random.default_rng(spec.seed)
    mean = spec.rate_hz * g.n_pixels * spec.duration_us * 1e-6
    n = rng.poisson(mean)
    pix = rng.integers(0, g.n_pixels, size=n)
    t = np.floor(rng.uniform(0, spec.duration_us, size=n)).astype(np.uint64)
    p = rng.integers(0, 2, size=n)
    return _sorted_stream(g, pix % g.width, pix // g.width, t, p, Label.NOISE)


@dataclass(frozen=True)
class EdgeSpec:
    """A straight bar sweeping across the sensor.

    ``orientation="vertical"`` is a column-aligned bar moving along x and
    covering rows ``span``; ``"horizontal"`` moves along y covering columns
    ``span``.  Position is ``start + velocity * t`` (px, px/s).  Every pixel
    under the bar fires as a Poisson process at ``rate_hz``; ON while the
    leading half covers it, OFF for the trailing half.  With ``wrap`` the bar
    re-enters from the opposite border, otherwise it leaves the sensor.
    """

    orientation: str = "vertical"
    start: float = 0.0
    velocity: float = 200.0
    thickness: int = 3
    span: tuple[int, int] = (0, 100)
    rate_hz: float = 1000.0
    wrap: bool = True

    def __post_init__(self):
        if self.orientation not in ("vertical", "horizontal"):
            raise ConfigError(f"bad edge orientation {self.orientation!r}")
        if self.thickness < 1 or self.rate_hz < 0 or self.span[1] <= self.span[0]:
            raise ConfigError(f"invalid edge {self}")


@dataclass(frozen=True)
class SceneSpec:
    geometry: SensorGeometry
    edges: Sequence[EdgeSpec] = field(default_factory=lambda: (EdgeSpec(),))
    duration_us: int = 1_000_000
    seed: int = 0


def dwell_intervals(edge: EdgeSpec, line: int, extent: int, duration_us: int):
    """``(start, stop, entered)`` intervals (us) during which the bar covers ``line``.

    ``extent`` is the sensor size along the direction of motion; ``entered``
    is the unclipped time the bar reached the line.
    """
    v = edge.velocity
    if v == 0:
        rel = (line - edge.start) % extent if edge.wrap else line - edge.start
        return [(0.0, float(duration_us), 0.0)] if 0 <= rel < edge.thickness else []
    # bar covers line while start + v*t in (line - thickness, line]
    speed = abs(v) * 1e-6
    if v > 0:
        first = (line - edge.start - edge.thickness) / speed
    else:
        first = (edge.start - line - 1) / speed
    dwell = edge.thickness / speed
    period = extent / speed if edge.wrap else None
    out = []
    if period is None:
        starts = [first]
    else:
        k0 = int(np.floor(-first / period)) - 1
        starts = [first + k * period for k in range(k0, k0 + int(duration_us / period) + 3)]
    for a in starts:
        lo, hi = max(a, 0.0), min(a + dwell, float(duration_us))
        if lo < hi:
            out.append((lo, hi, a))
    return out


def gen_scene(spec: SceneSpec) -> LabeledStream:
    g = spec.geometry
    rng = np.random.default_rng(spec.seed)
    xs, ys, ts, ps = [], [], [], []
    for edge in spec.edges:
        vertical = edge.orientation == "vertical"
        extent = g.width if vertical else g.height
        across = g.height if vertical else g.width
        lo_span, hi_span = max(edge.span[0], 0), min(edge.span[1], across)
        if lo_span >= hi_span:
            continue
        for line in range(extent):
            for a, b, entered in dwell_intervals(edge, line, extent, spec.duration_us):
                npx = hi_span - lo_span
                counts = rng.poisson(edge.rate_hz * (b - a) * 1e-6, size=npx)
                total = int(counts.sum())
                if total == 0:
                    continue
                t = rng.uniform(a, b, size=total)
                other = np.repeat(np.arange(lo_span, hi_span), counts)
                half = entered + 0.5 * edge.thickness / (abs(edge.velocity) * 1e-6) \
                    if edge.velocity else np.inf
                p = (t < half).astype(np.int64)
                coord = np.full(total, line)
                xs.append(coord if vertical else other)
                ys.append(other if vertical else coord)
                ts.append(np.floor(t).astype(np.uint64))
                ps.append(p)
    if not xs:
        return LabeledStream(g)
    return _sorted_stream(g, np.concatenate(xs), np.concatenate(ys), np.concatenate(ts),
                          np.concatenate(ps), Label.SIGNAL)


def gen_support_pairs(geometry: SensorGeometry, lags_us, isolation_us: int, seed: int = 0) -> LabeledStream:
    """Isolated two-event clusters with prescribed support lags.

    Each pair is a noise-labelled event at a random pixel followed, ``lag``
    us later, by a signal event at one of its 8 neighbours.  Pairs sit on a
    grid of cells 4 px apart, at most one pair per cell per time slot, and
    slots are spaced so that any two events from different pairs are either
    spatially disjoint or at least ``isolation_us`` apart.
    """
    rng = np.random.default_rng(seed)
    lags = np.asarray(lags_us, dtype=np.int64)
    n = lags.size
    if n and lags.min() < 0:
        raise ConfigError("lags must be non-negative")
    cw, ch = (geometry.width - 2) // 4, (geometry.height - 2) // 4
    n_cells = cw * ch
    if n_cells < 1:
        raise ConfigError(f"sensor {geometry} too small for isolated pairs")
    half = int(lags.max(initial=0)) + int(isolation_us) + 1
    slot = np.arange(n) // n_cells
    cell = np.concatenate([rng.permutation(n_cells) for _ in range(int(slot.max(initial=0)) + 1)])[:n]
    ax = 4 * (cell % cw) + 2
    ay = 4 * (cell // cw) + 2
    offsets = np.array([(m, k) for k in (-1, 0, 1) for m in (-1, 0, 1) if (m, k) != (0, 0)])
    o = offsets[rng.integers(0, 8, size=n)]
    ta = slot * 2 * half + rng.integers(0, half, size=n)
    x = np.concatenate([ax, ax + o[:, 0]])
    y = np.concatenate([ay, ay + o[:, 1]])
    t = np.concatenate([ta, ta + lags]).astype(np.uint64)
    label = np.concatenate([np.full(n, Label.NOISE), np.full(n, Label.SIGNAL)])
    p = np.ones(2 * n, dtype=np.int64)
    order = np.argsort(t, kind="stable")
    return LabeledStream(geometry, make_events(x[order], y[order], t[order], p[order], label[order]))


def two_edge_scene(geometry: SensorGeometry, duration_us: int = 500_000, seed: int = 0,
                   edge_rate_hz: float = 1000.0) -> SceneSpec:
    """A vertical bar sweeping right and a horizontal bar sweeping up.

    Spans and speeds scale with the sensor so the scene stays well inside
    any geometry.
    """
    w, h = geometry.width, geometry.height
    return SceneSpec(geometry, (
        EdgeSpec("vertical", 0.0, 300.0 * w / 346, 3, (int(0.12 * h), int(0.88 * h)), edge_rate_hz),
        EdgeSpec("horizontal", 0.0, -150.0 * h / 260, 3, (int(0.12 * w), int(0.87 * w)), edge_rate_hz),
    ), duration_us, seed)
