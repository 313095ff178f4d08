"""Analytical memory, energy-per-event and throughput models.

Energy is the sum over a filter's per-event operation trace of
``count * unit cost``.  SRAM access cost depends on the size of the array
being accessed: the cost table lists the energy of a 64-bit access at a
few array sizes, values in between are interpolated linearly in size, and
an access of ``b`` bits costs ``b/64`` of a 64-bit one.  Below the smallest
anchor the cost is held flat; above the largest it grows in proportion to
size.  Every step has non-negative weights, so energy is monotone in every
table entry and scales linearly with the whole table.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources as _pkg_resources
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .events import SensorGeometry
from .exceptions import ConfigError, CostTableError

KB = 1024
TIMESTAMP_BITS = 32
ONF_CELL_BITS = 64
# event rate the BF2 row-clear cost is amortised over, at the reference sensor
REFERENCE_EVENT_RATE = 1.11e6
REFERENCE_GEOMETRY = SensorGeometry(346, 260)

STANDARD_GEOMETRIES = (SensorGeometry(240, 180), SensorGeometry(346, 260),
                     SensorGeometry(640, 480), SensorGeometry(1280, 960))

# BF2 (W, D, K) per sensor for tau = 5 ms
DEFAULT_BF2_CONFIGS = {
    SensorGeometry(240, 180): (16384, 4, 4),
    SensorGeometry(346, 260): (16384, 4, 4),
    SensorGeometry(640, 480): (32768, 4, 4),
    SensorGeometry(1280, 960): (65536, 4, 4),
}

FILTER_KINDS = ("bf2", "baf", "guo", "onf", "hashheat")


@dataclass(frozen=True)
class EnergyCostTable:
    """Per-operation energies (pJ) plus size-classed SRAM access costs."""

    sram_64bit_access: tuple  # ((size KiB, pJ), ...) ascending
    ops: Mapping[str, float] = field(default_factory=dict)
    technology: str = "45nm"

    def __post_init__(self):
        anchors = tuple((float(s), float(c)) for s, c in self.sram_64bit_access)
        if not anchors:
            raise CostTableError("cost table has no SRAM anchors")
        sizes = [s for s, _ in anchors]
        if any(b <= a for a, b in zip(sizes, sizes[1:])) or sizes[0] <= 0:
            raise ConfigError("SRAM anchor sizes must be positive and strictly increasing")
        if any(c < 0 for _, c in anchors) or any(v < 0 for v in self.ops.values()):
            raise ConfigError("costs must be non-negative")
        object.__setattr__(self, "sram_64bit_access", anchors)
        object.__setattr__(self, "ops", dict(self.ops))

    @classmethod
    def from_json(cls, path) -> "EnergyCostTable":
        with open(path) as fh:
            return cls._from_dict(json.load(fh))

    @classmethod
    def _from_dict(cls, d) -> "EnergyCostTable":
        try:
            return cls(tuple(map(tuple, d["sram_64bit_access"])), d.get("ops", {}),
                       d.get("technology", ""))
        except KeyError as exc:
            raise CostTableError(f"cost table lacks {exc}") from None

    def op(self, name: str) -> float:
        try:
            return self.ops[name]
        except KeyError:
            raise CostTableError(f"cost table has no entry {name!r}") from None

    def sram_access(self, size_bytes: float, bits: int) -> float:
        """Energy of one ``bits``-wide access to an array of ``size_bytes``."""
        kb = size_bytes / KB
        sizes = [s for s, _ in self.sram_64bit_access]
        costs = [c for _, c in self.sram_64bit_access]
        if kb <= sizes[0]:
            c64 = costs[0]
        elif kb >= sizes[-1]:
            c64 = costs[-1] * kb / sizes[-1]
        else:
            c64 = float(np.interp(kb, sizes, costs))
        return c64 * bits / 64.0

    def scaled(self, factor: float) -> "EnergyCostTable":
        return EnergyCostTable(tuple((s, c * factor) for s, c in self.sram_64bit_access),
                               {k: v * factor for k, v in self.ops.items()}, self.technology)


def default_costs() -> EnergyCostTable:
    text = _pkg_resources.files("bf2filter").joinpath("data/costs_45nm.json").read_text()
    return EnergyCostTable._from_dict(json.loads(text))


# -- memory -------------------------------------------------------------------

def _cfg(config, key, default=None):
    if config is None:
        config = {}
    if isinstance(config, Mapping):
        val = config.get(key, default)
    else:
        val = getattr(config, key, default)
    if val is None:
        raise ConfigError(f"configuration needs {key!r}")
    return val


def memory_bits(kind: str, geometry: SensorGeometry, config=None) -> int:
    """State size in bits.

    * bf2: ``K*W*D`` (config ``W``, ``D``, ``K``)
    * baf/guo: ``R*C*n_T`` (config ``n_T``, default 32)
    * onf: ``(R + C)*64``
    * hashheat: ``m*cell_width`` (defaults 4096, 8)
    """
    g = geometry
    if kind == "bf2":
        return int(_cfg(config, "K")) * int(_cfg(config, "W")) * int(_cfg(config, "D"))
    if kind in ("baf", "guo"):
        return g.width * g.height * int(_cfg(config, "n_T", TIMESTAMP_BITS))
    if kind == "onf":
        return (g.width + g.height) * ONF_CELL_BITS
    if kind == "hashheat":
        return int(_cfg(config, "m", 4096)) * int(_cfg(config, "cell_width", 8))
    raise ConfigError(f"unknown filter {kind!r}")


def memory_kb(bits: int) -> float:
    return bits / 8 / KB


# -- energy -------------------------------------------------------------------

class TraceItem(NamedTuple):
    operation: str
    count: float
    unit_pj: float

    @property
    def energy(self) -> float:
        return self.count * self.unit_pj


def default_event_rate(geometry: SensorGeometry) -> float:
    """Assumed event rate (ev/s), scaled with the linear sensor size."""
    n = math.sqrt(geometry.n_pixels)
    return REFERENCE_EVENT_RATE * n / math.sqrt(REFERENCE_GEOMETRY.n_pixels)


def energy_trace(kind: str, geometry: SensorGeometry, config=None,
                 costs: EnergyCostTable | None = None) -> list[TraceItem]:
    """Per-event operation list with unit costs."""
    c = costs if costs is not None else default_costs()
    g = geometry
    if kind == "bf2":
        W, D, K = int(_cfg(config, "W")), int(_cfg(config, "D")), int(_cfg(config, "K"))
        tau = int(_cfg(config, "tau", 5000))
        rate = float(_cfg(config, "event_rate", default_event_rate(g)))
        block = W / 8                      # one bank row is its own W-bit array
        tau_row = tau // D
        index_bits = int(math.log2(W))
        clears_per_event = 1e6 / (tau_row * rate) if rate > 0 else 0.0
        return [
            TraceItem("bf2 bit read", 8 * K * D, c.sram_access(block, 1)),
            TraceItem("bf2 bit write", K, c.sram_access(block, 1)),
            TraceItem("h3 index bit", 9 * K * index_bits, c.op("h3_index_bit")),
            TraceItem("neighbour address add", 16, c.op("int_add_16")),
            TraceItem("row clear word write", K * max(1, W // 64) * clears_per_event,
                      c.sram_access(block, 64)),
        ]
    if kind in ("baf", "guo"):
        n_t = int(_cfg(config, "n_T", TIMESTAMP_BITS))
        size = memory_bits(kind, g, config) / 8
        return [
            TraceItem("timestamp read", 8, c.sram_access(size, n_t)),
            TraceItem("timestamp write", 1, c.sram_access(size, n_t)),
            TraceItem("timestamp compare", 8, c.op("int_cmp_32")),
        ]
    if kind == "onf":
        size = memory_bits("onf", g) / 8
        return [
            TraceItem("cell read", 6, c.sram_access(size, ONF_CELL_BITS)),
            TraceItem("cell write", 2, c.sram_access(size, ONF_CELL_BITS)),
            TraceItem("timestamp compare", 6, c.op("int_cmp_32")),
            TraceItem("coordinate compare", 6, c.op("int_cmp_16")),
        ]
    if kind == "hashheat":
        k = int(_cfg(config, "k", 4))
        cw = int(_cfg(config, "cell_width", 8))
        size = memory_bits("hashheat", g, config) / 8
        return [
            TraceItem("hash multiply", 3 * k, c.op("int_mult_16")),
            TraceItem("hash add", 3 * k, c.op("int_add_16")),
            TraceItem("counter read", k, c.sram_access(size, cw)),
            TraceItem("counter write", k, c.sram_access(size, cw)),
            TraceItem("counter compare", k, c.op("int_cmp_8")),
        ]
    raise ConfigError(f"unknown filter {kind!r}")


def energy_per_event(kind: str, geometry: SensorGeometry, config=None,
                     costs: EnergyCostTable | None = None) -> float:
    """Energy (pJ) to process one event."""
    return float(sum(item.energy for item in energy_trace(kind, geometry, config, costs)))


# -- scaling ------------------------------------------------------------------

class ScalingRow(NamedTuple):
    kind: str
    geometry: SensorGeometry
    memory_bits: int
    memory_kb: float
    energy_pj: float


def _config_for(kind, geometry, tau, config_map):
    if kind != "bf2":
        return None
    cmap = DEFAULT_BF2_CONFIGS if config_map is None else config_map
    try:
        W, D, K = cmap[geometry]
    except KeyError:
        raise ConfigError(f"no BF2 configuration for {geometry}") from None
    return {"W": W, "D": D, "K": K, "tau": tau}


def scaling_table(kinds: Sequence[str] = FILTER_KINDS,
                  geometries: Sequence[SensorGeometry] = STANDARD_GEOMETRIES, tau: int = 5000,
                  config_map=None, costs: EnergyCostTable | None = None) -> list[ScalingRow]:
    costs = costs if costs is not None else default_costs()
    rows = []
    for kind in kinds:
        for g in geometries:
            cfg = _config_for(kind, g, tau, config_map)
            bits = memory_bits(kind, g, cfg)
            rows.append(ScalingRow(kind, g, bits, memory_kb(bits), energy_per_event(kind, g, cfg, costs)))
    return rows


def fit_power_law(rows: Sequence[ScalingRow], power: int):
    """Least-squares ``M_KB = F * N**power`` through the origin, ``N = sqrt(R*C)``.

    Returns ``(F, r_squared)``.
    """
    n = np.array([math.sqrt(r.geometry.n_pixels) for r in rows]) ** power
    m = np.array([r.memory_kb for r in rows])
    f = float(n @ m / (n @ n))
    resid = m - f * n
    ss_tot = float(((m - m.mean()) ** 2).sum())
    return f, (1.0 - float(resid @ resid) / ss_tot) if ss_tot else 1.0


# -- throughput ---------------------------------------------------------------

@dataclass(frozen=True)
class CycleModel:
    search_cycles: int = 8
    store_cycles: int = 1

    @property
    def cycles_per_event(self) -> int:
        return self.search_cycles + self.store_cycles


def throughput(clock_hz: float, model: CycleModel = CycleModel()) -> float:
    """Events per second for a pipeline that handles one event at a time."""
    if clock_hz < 0:
        raise ConfigError("clock frequency must be non-negative")
    return clock_hz / model.cycles_per_event
