"""Image-method ray tracing on occupancy grids.

Gains follow Friis free-space loss along the unfolded route plus a fixed
loss per bounce. Walls are opaque; there is no diffraction or transmission.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum, IntEnum

import numpy as np

from . import kernels
from .envmap import CellClass, EnvironmentMap, OutOfBounds, WorldPoint

SPEED_OF_LIGHT = 299_792_458.0


class InvalidEndpoint(ValueError):
    pass


class LinkState(IntEnum):
    LOS = 0
    NLOS = 1
    OUTAGE = 2


class MapKind(str, Enum):
    FULL = "FullMap"
    PARTIAL = "PartialFreeSpaceFilled"


@dataclass(frozen=True)
class TracerConfig:
    frequency_ghz: float = 28.0
    max_reflection_order: int = 2
    reflection_loss_db: float = 10.0
    g_min_db: float = -150.0

    def __post_init__(self):
        if not self.frequency_ghz > 0:
            raise ValueError("frequency_ghz must be positive")
        if not 0 <= self.max_reflection_order <= 3:
            raise ValueError("max_reflection_order must be in [0, 3]")
        if not self.g_min_db < 0:
            raise ValueError("g_min_db must be negative")


@dataclass(frozen=True)
class Path:
    gain_db: float
    route: tuple[WorldPoint, ...]
    order: int

    @property
    def length(self) -> float:
        return route_length(self.route)


@dataclass(frozen=True)
class PathSet:
    paths: tuple[Path, ...]
    tx: WorldPoint
    rx: WorldPoint
    map_kind: MapKind = MapKind.FULL


def route_length(route) -> float:
    return sum(math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in zip(route, route[1:]))


def fspl_db(distance_m: float, frequency_ghz: float) -> float:
    """Free-space path loss 20*log10(4*pi*d*f/c) in dB."""
    return 20.0 * math.log10(4.0 * math.pi * distance_m * frequency_ghz * 1e9 / SPEED_OF_LIGHT)


def path_gain_db(length_m: float, order: int, cfg: TracerConfig) -> float:
    return -fspl_db(length_m, cfg.frequency_ghz) - order * cfg.reflection_loss_db


def _check_point(env: EnvironmentMap, p, name: str) -> WorldPoint:
    p = WorldPoint(float(p[0]), float(p[1]))
    if not env.contains(p):
        raise OutOfBounds(f"{name} {tuple(p)} outside map bounds {env.bounds}")
    return p


def segment_clear(env: EnvironmentMap, a, b) -> bool:
    """True iff the segment a->b crosses no wall cell.

    A segment touching a wall only along a face or at a corner is clear,
    except at a corner where the two diagonal neighbours are both walls.
    """
    a = _check_point(env, a, "a")
    b = _check_point(env, b, "b")
    ua, va = env.to_grid(a)
    ub, vb = env.to_grid(b)
    return bool(kernels.segment_clear(env.cells, ua, va, ub, vb))


def trace(env: EnvironmentMap, tx, rx, cfg: TracerConfig = TracerConfig(),
          map_kind: MapKind = MapKind.FULL) -> PathSet:
    tx = _check_point(env, tx, "tx")
    rx = _check_point(env, rx, "rx")
    if tx == rx:
        raise InvalidEndpoint("tx and rx coincide")
    for name, p in (("tx", tx), ("rx", rx)):
        if env.cell_class(p) == CellClass.WALL:
            raise InvalidEndpoint(f"{name} {tuple(p)} lies inside a wall cell")
    tu, tv = env.to_grid(tx)
    ru, rv = env.to_grid(rx)
    raw = kernels.image_paths(env.cells, env.faces, tu, tv, ru, rv, cfg.max_reflection_order)
    ox, oy = env.origin
    res = env.resolution
    paths = []
    for order, verts in raw:
        route = [tx] + [WorldPoint(ox + u * res, oy + v * res) for u, v in verts[1:-1]] + [rx]
        gain = path_gain_db(route_length(route), order, cfg)
        if gain < cfg.g_min_db:
            continue
        paths.append(Path(gain, tuple(route), order))
    return PathSet(tuple(paths), tx, rx, MapKind(map_kind))


def omni_gain(ps: PathSet, cfg: TracerConfig = TracerConfig()) -> float:
    """Power sum of all path gains in dB, clipped below at g_min."""
    if not ps.paths:
        return cfg.g_min_db
    gains = np.array([p.gain_db for p in ps.paths])
    top = gains.max()
    total = top + 10.0 * math.log10(float(np.sum(10.0 ** ((gains - top) / 10.0))))
    return float(max(total, cfg.g_min_db))


def link_state(ps: PathSet, cfg: TracerConfig = TracerConfig()) -> LinkState:
    if not ps.paths:
        return LinkState.OUTAGE
    if any(p.order == 0 for p in ps.paths):
        return LinkState.LOS
    return LinkState.NLOS


def pathset_to_dict(ps: PathSet) -> dict:
    return {
        "tx": [ps.tx.x, ps.tx.y],
        "rx": [ps.rx.x, ps.rx.y],
        "map_kind": ps.map_kind.value,
        "paths": [
            {"gain_db": p.gain_db, "order": p.order, "route": [[q.x, q.y] for q in p.route]}
            for p in ps.paths
        ],
    }


def pathset_from_dict(d: dict) -> PathSet:
    paths = tuple(
        Path(float(p["gain_db"]), tuple(WorldPoint(*q) for q in p["route"]), int(p["order"]))
        for p in d["paths"]
    )
    return PathSet(paths, WorldPoint(*d["tx"]), WorldPoint(*d["rx"]), MapKind(d["map_kind"]))


def pathset_to_json(ps: PathSet) -> str:
    return json.dumps(pathset_to_dict(ps), indent=2)
