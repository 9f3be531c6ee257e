"""Occupancy-grid environments, observed regions and the BSP floorplan generator."""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass
from enum import IntEnum
from functools import cached_property
from pathlib import Path
from typing import NamedTuple

import numpy as np


class CellClass(IntEnum):
    FREE = 0
    WALL = 1
    EXTERIOR = 2


_CHARS = {CellClass.FREE: "F", CellClass.WALL: "W", CellClass.EXTERIOR: "X"}
_FROM_CHAR = {v: k for k, v in _CHARS.items()}


class MapError(ValueError):
    pass


class InvalidParams(MapError):
    pass


class DimensionMismatch(MapError):
    pass


class OutOfBounds(MapError):
    pass


class WorldPoint(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True, eq=False)
class EnvironmentMap:
    """A 2D grid of cell classes.

    ``cells[i, j]`` is row ``i`` (y axis) and column ``j`` (x axis). Cell
    ``(i, j)`` covers ``[ox + j*res, ox + (j+1)*res] x [oy + i*res, oy + (i+1)*res]``
    where ``(ox, oy)`` is ``origin``.
    """

    cells: np.ndarray
    resolution: float = 0.15
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        cells = np.ascontiguousarray(self.cells, dtype=np.uint8)
        if cells.ndim != 2:
            raise InvalidParams("cells must be a 2D grid")
        if cells.shape[0] < 4 or cells.shape[1] < 4:
            raise InvalidParams(f"grid must be at least 4x4, got {cells.shape}")
        if not self.resolution > 0:
            raise InvalidParams("resolution must be positive")
        if cells.size and cells.max() > 2:
            raise InvalidParams("unknown cell class in grid")
        cells = cells.copy()
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))
        object.__setattr__(self, "resolution", float(self.resolution))

    @property
    def height_cells(self) -> int:
        return self.cells.shape[0]

    @property
    def width_cells(self) -> int:
        return self.cells.shape[1]

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        ox, oy = self.origin
        return ox, oy, ox + self.width_cells * self.resolution, oy + self.height_cells * self.resolution

    def __eq__(self, other):
        if not isinstance(other, EnvironmentMap):
            return NotImplemented
        return (
            self.resolution == other.resolution
            and self.origin == other.origin
            and np.array_equal(self.cells, other.cells)
        )

    __hash__ = None

    def contains(self, p) -> bool:
        x0, y0, x1, y1 = self.bounds
        return math.isfinite(p[0]) and math.isfinite(p[1]) and x0 <= p[0] <= x1 and y0 <= p[1] <= y1

    def to_grid(self, p) -> tuple[float, float]:
        """World point to continuous grid coordinates (u along columns, v along rows)."""
        return (p[0] - self.origin[0]) / self.resolution, (p[1] - self.origin[1]) / self.resolution

    def cell_of(self, p) -> tuple[int, int]:
        if not self.contains(p):
            raise OutOfBounds(f"point {tuple(p)} outside map bounds {self.bounds}")
        u, v = self.to_grid(p)
        i = min(int(math.floor(v)), self.height_cells - 1)
        j = min(int(math.floor(u)), self.width_cells - 1)
        return i, j

    def cell_center(self, i: int, j: int) -> WorldPoint:
        return WorldPoint(
            self.origin[0] + (j + 0.5) * self.resolution,
            self.origin[1] + (i + 0.5) * self.resolution,
        )

    def cell_class(self, p) -> CellClass:
        return CellClass(int(self.cells[self.cell_of(p)]))

    @cached_property
    def faces(self) -> np.ndarray:
        """Reflecting faces in grid units, one row per maximal flat run.

        Columns: axis (0 = vertical line u=coord, 1 = horizontal v=coord),
        coord, lo, hi, side (+1/-1, the direction of the non-wall half-plane).
        """
        return wall_faces(self.cells)

    def validate(self) -> None:
        """Check the invariants required of ground-truth maps.

        Filled maps legitimately violate the boundary rule, so this is not
        run on construction.
        """
        c = self.cells
        ring = np.concatenate([c[0], c[-1], c[:, 0], c[:, -1]])
        if np.any(ring == CellClass.FREE):
            raise InvalidParams("outer boundary ring must be Wall or Exterior")
        free = c == CellClass.FREE
        padded = np.pad(free, 1)
        neigh = padded[:-2, 1:-1] | padded[2:, 1:-1] | padded[1:-1, :-2] | padded[1:-1, 2:]
        if np.any(free & ~neigh):
            raise InvalidParams("isolated free cell")


def wall_faces(cells: np.ndarray) -> np.ndarray:
    wall = cells == CellClass.WALL
    H, W = wall.shape
    rows = []
    # vertical faces on column boundaries k = 1..W-1
    left, right = wall[:, :-1], wall[:, 1:]
    for side, hit in ((1.0, left & ~right), (-1.0, right & ~left)):
        for k in range(W - 1):
            col = hit[:, k]
            i = 0
            while i < H:
                if col[i]:
                    start = i
                    while i < H and col[i]:
                        i += 1
                    rows.append((0.0, float(k + 1), float(start), float(i), side))
                else:
                    i += 1
    below, above = wall[:-1, :], wall[1:, :]
    for side, hit in ((1.0, below & ~above), (-1.0, above & ~below)):
        for k in range(H - 1):
            row = hit[k, :]
            j = 0
            while j < W:
                if row[j]:
                    start = j
                    while j < W and row[j]:
                        j += 1
                    rows.append((1.0, float(k + 1), float(start), float(j), side))
                else:
                    j += 1
    rows.sort()
    return np.ascontiguousarray(np.array(rows, dtype=np.float64).reshape(-1, 5))


@dataclass(frozen=True, eq=False)
class ObservedRegion:
    mask: np.ndarray
    step_index: int = 0

    def __post_init__(self):
        mask = np.ascontiguousarray(self.mask, dtype=bool).copy()
        if mask.ndim != 2:
            raise DimensionMismatch("mask must be a 2D grid")
        if self.step_index < 0:
            raise InvalidParams("step_index must be nonnegative")
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    @classmethod
    def full(cls, env: EnvironmentMap, step_index: int = 0) -> "ObservedRegion":
        return cls(np.ones(env.cells.shape, dtype=bool), step_index)

    @classmethod
    def empty(cls, env: EnvironmentMap, step_index: int = 0) -> "ObservedRegion":
        return cls(np.zeros(env.cells.shape, dtype=bool), step_index)

    def __eq__(self, other):
        if not isinstance(other, ObservedRegion):
            return NotImplemented
        return self.step_index == other.step_index and np.array_equal(self.mask, other.mask)

    __hash__ = None

    def issubset(self, other: "ObservedRegion") -> bool:
        return bool(np.all(~self.mask | other.mask))

    def check_matches(self, env: EnvironmentMap) -> None:
        if self.mask.shape != env.cells.shape:
            raise DimensionMismatch(
                f"mask shape {self.mask.shape} does not match map shape {env.cells.shape}"
            )


def fill_free_space(env: EnvironmentMap, region: ObservedRegion) -> EnvironmentMap:
    """Keep observed cells, turn every unobserved cell into free space."""
    region.check_matches(env)
    cells = np.where(region.mask, env.cells, np.uint8(CellClass.FREE)).astype(np.uint8)
    return EnvironmentMap(cells, env.resolution, env.origin)


def point_is_indoor(env: EnvironmentMap, p) -> bool:
    return env.cell_class(p) == CellClass.FREE


def free_cell_fraction(env: EnvironmentMap) -> float:
    return float(np.mean(env.cells == CellClass.FREE))


def flood_fill(passable: np.ndarray, start: tuple[int, int]) -> np.ndarray:
    """4-connected component of ``start`` over a boolean grid."""
    H, W = passable.shape
    out = np.zeros_like(passable, dtype=bool)
    if not passable[start]:
        return out
    q = deque([start])
    out[start] = True
    while q:
        i, j = q.popleft()
        for a, b in ((i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)):
            if 0 <= a < H and 0 <= b < W and passable[a, b] and not out[a, b]:
                out[a, b] = True
                q.append((a, b))
    return out


# -- floorplan generation -----------------------------------------------------

@dataclass(frozen=True)
class FloorplanParams:
    width_m: float = 12.0
    height_m: float = 12.0
    min_room_m: float = 1.8
    door_width_m: float = 0.9
    wall_thickness_m: float = 0.15
    margin_m: float = 1.0
    resolution: float = 0.15

    def check(self) -> None:
        for name in ("width_m", "height_m", "min_room_m", "door_width_m", "wall_thickness_m", "resolution"):
            if not getattr(self, name) > 0:
                raise InvalidParams(f"{name} must be positive")
        if self.margin_m < 0:
            raise InvalidParams("margin_m must be nonnegative")
        if self.door_width_m >= self.min_room_m:
            raise InvalidParams("door_width_m must be smaller than min_room_m")
        if self.min_room_m < 3 * self.resolution:
            raise InvalidParams("min_room_m must be at least 3 cells")


def generate_floorplan(seed: int, params: FloorplanParams = FloorplanParams()) -> EnvironmentMap:
    """Rectangular building split into rooms by recursive binary space partition.

    Every partition wall gets exactly one door. A split is rejected if its
    wall would abut an existing door.
    """
    params.check()
    res = params.resolution
    rng = np.random.default_rng(seed)
    W = int(round(params.width_m / res))
    H = int(round(params.height_m / res))
    m = int(round(params.margin_m / res))
    t = max(1, int(round(params.wall_thickness_m / res)))
    min_room = int(math.ceil(params.min_room_m / res - 1e-9))
    door = max(1, int(round(params.door_width_m / res)))
    if W - 2 * m - 2 * t < 1 or H - 2 * m - 2 * t < 1:
        raise InvalidParams("map too small for the building margin and walls")
    if W < 4 or H < 4:
        raise InvalidParams("map must be at least 4x4 cells")

    cells = np.full((H, W), CellClass.EXTERIOR, dtype=np.uint8)
    cells[m:H - m, m:W - m] = CellClass.WALL
    r0, c0, r1, c1 = m + t, m + t, H - m - t, W - m - t
    cells[r0:r1, c0:c1] = CellClass.FREE

    stack = [(r0, c0, r1, c1)]
    while stack:
        r0, c0, r1, c1 = stack.pop()
        h, w = r1 - r0, c1 - c0
        if w > h:
            order = ["v", "h"]
        elif h > w:
            order = ["h", "v"]
        else:
            order = ["v", "h"] if rng.random() < 0.5 else ["h", "v"]
        for orient in order:
            if orient == "v":
                cand = [
                    c for c in range(c0 + min_room, c1 - min_room - t + 1)
                    if np.all(cells[r0 - 1, c - 1:c + t + 1] == CellClass.WALL)
                    and np.all(cells[r1, c - 1:c + t + 1] == CellClass.WALL)
                ]
            else:
                cand = [
                    r for r in range(r0 + min_room, r1 - min_room - t + 1)
                    if np.all(cells[r - 1:r + t + 1, c0 - 1] == CellClass.WALL)
                    and np.all(cells[r - 1:r + t + 1, c1] == CellClass.WALL)
                ]
            if not cand:
                continue
            pos = cand[int(rng.integers(len(cand)))]
            span = (r1 - r0) if orient == "v" else (c1 - c0)
            d = min(door, span)
            d0 = int(rng.integers(0, span - d + 1))
            if orient == "v":
                cells[r0:r1, pos:pos + t] = CellClass.WALL
                cells[r0 + d0:r0 + d0 + d, pos:pos + t] = CellClass.FREE
                stack.append((r0, pos + t, r1, c1))
                stack.append((r0, c0, r1, pos))
            else:
                cells[pos:pos + t, c0:c1] = CellClass.WALL
                cells[pos:pos + t, c0 + d0:c0 + d0 + d] = CellClass.FREE
                stack.append((pos + t, c0, r1, c1))
                stack.append((r0, c0, pos, c1))
            break
    return EnvironmentMap(cells, res, (0.0, 0.0))


# -- file formats -------------------------------------------------------------

def map_to_dict(env: EnvironmentMap) -> dict:
    return {
        "width_cells": env.width_cells,
        "height_cells": env.height_cells,
        "resolution_m": env.resolution,
        "origin": [env.origin[0], env.origin[1]],
        "cells": "".join(_CHARS[CellClass(v)] for v in env.cells.ravel().tolist()),
    }


def map_from_dict(d: dict) -> EnvironmentMap:
    w, h = int(d["width_cells"]), int(d["height_cells"])
    s = d["cells"]
    if len(s) != w * h:
        raise DimensionMismatch(f"cells string has {len(s)} characters, expected {w * h}")
    try:
        flat = [int(_FROM_CHAR[ch]) for ch in s]
    except KeyError as e:
        raise InvalidParams(f"unknown cell character {e.args[0]!r}") from None
    return EnvironmentMap(np.array(flat, dtype=np.uint8).reshape(h, w), float(d["resolution_m"]), tuple(d["origin"]))


def region_to_dict(region: ObservedRegion, env: EnvironmentMap) -> dict:
    region.check_matches(env)
    return {
        "width_cells": env.width_cells,
        "height_cells": env.height_cells,
        "resolution_m": env.resolution,
        "origin": [env.origin[0], env.origin[1]],
        "cells": "".join("1" if v else "0" for v in region.mask.ravel().tolist()),
        "step_index": region.step_index,
    }


def region_from_dict(d: dict) -> ObservedRegion:
    w, h = int(d["width_cells"]), int(d["height_cells"])
    s = d["cells"]
    if len(s) != w * h or set(s) - {"0", "1"}:
        raise DimensionMismatch("observed-region cells must be w*h characters of '0'/'1'")
    mask = np.frombuffer(s.encode("ascii"), dtype=np.uint8).reshape(h, w) == ord("1")
    return ObservedRegion(mask, int(d["step_index"]))


def save_map(env: EnvironmentMap, path) -> None:
    Path(path).write_text(json.dumps(map_to_dict(env)))


def load_map(path) -> EnvironmentMap:
    return map_from_dict(json.loads(Path(path).read_text()))


def save_region(region: ObservedRegion, env: EnvironmentMap, path) -> None:
    Path(path).write_text(json.dumps(region_to_dict(region, env)))


def load_region(path) -> ObservedRegion:
    return region_from_dict(json.loads(Path(path).read_text()))
