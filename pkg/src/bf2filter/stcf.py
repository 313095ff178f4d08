"""Background-activity filtering on top of BF2.

For each event the eight neighbouring pixels are searched in BF2; a
neighbour supports the event when any row hits.  The event is signal when
at least ``s`` distinct neighbour locations support it.  It is then
inserted regardless of its class.

The row pointer is advanced to the event's bin *before* the search, so the
search never sees a row that has already expired.  The event's own pixel
is not part of its neighbourhood, which keeps hot pixels from supporting
themselves.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .bf2 import Bf2, Bf2Config
from .events import Event, LabeledStream, SensorGeometry
from .exceptions import ConfigError, GeometryError

_OFFSETS = [(m, n) for n in (-1, 0, 1) for m in (-1, 0, 1) if (m, n) != (0, 0)]


@dataclass(frozen=True)
class StcfParams:
    tau: int
    s: int = 1
    W: int = 16384
    D: int = 4
    K: int = 4

    def __post_init__(self):
        if not 1 <= self.s <= 8:
            raise ConfigError(f"support threshold s must be in [1, 8], got {self.s}")
        self.bf2  # validate eagerly

    @property
    def bf2(self) -> Bf2Config:
        return Bf2Config.from_tau(self.tau, self.W, self.D, self.K)

    @property
    def include_self(self) -> bool:
        return False


class EventClass(NamedTuple):
    signal: bool
    support: int


@dataclass(frozen=True)
class Classification:
    signal: np.ndarray          # bool per event
    support: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.signal)

    @property
    def labels(self) -> np.ndarray:
        """Predicted labels as uint8 (1 = signal, 0 = noise)."""
        return self.signal.astype(np.uint8)


def neighbor_coords(x: int, y: int, geometry: SensorGeometry):
    """In-sensor 8-neighbours of ``(x, y)``, the pixel itself excluded."""
    return [(x + m, y + n) for m, n in _OFFSETS
            if 0 <= x + m < geometry.width and 0 <= y + n < geometry.height]


def classify(state: Bf2, params: StcfParams, event: Event, geometry: SensorGeometry) -> EventClass:
    """Classify one event and insert it into ``state``."""
    if not (0 <= event.x < geometry.width and 0 <= event.y < geometry.height):
        raise GeometryError(f"event ({event.x},{event.y}) outside {geometry}")
    state.advance_to(event.t)
    support = sum(state.search(nx, ny).any for nx, ny in neighbor_coords(event.x, event.y, geometry))
    state.insert(event.x, event.y, event.t)
    return EventClass(support >= params.s, support)


def process_stream(stream: LabeledStream, params: StcfParams, hash_seed: int = 1,
                   clear_mode: str = "strict", polarity_split: bool = False) -> Classification:
    """Run a fresh filter over ``stream`` and return per-event classes.

    With ``polarity_split`` ON and OFF events go to two independent BF2
    states (both built from the same hash seed).
    """
    g = stream.geometry
    n = len(stream)
    signal = np.zeros(n, dtype=bool)
    support = np.zeros(n, dtype=np.int64)
    if n == 0:
        return Classification(signal, support)
    groups = [stream.p == 0, stream.p != 0] if polarity_split else [slice(None)]
    for sel in groups:
        state = Bf2(params.bf2, hash_seed=hash_seed, clear_mode=clear_mode)
        sig, sup = state.run_stcf(stream.x[sel], stream.y[sel], stream.t[sel], params.s,
                                  g.width, g.height)
        signal[sel] = sig
        support[sel] = sup
    return Classification(signal, support)
