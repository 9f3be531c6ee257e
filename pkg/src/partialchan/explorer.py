"""Frontier-based exploration producing monotone observed regions.

Step 0 is the empty mask. Step 1 is the initial scan from the start cell.
Every later step moves the agent one cell toward the nearest frontier
(shortest known-free path, ties to the lowest row-major index) and scans
again. A frontier is an observed free cell with an unobserved 4-neighbour.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .envmap import CellClass, EnvironmentMap, ObservedRegion, WorldPoint, point_is_indoor


class StartOutdoors(ValueError):
    pass


@dataclass
class ExplorationRun:
    map_id: str
    agent_start: WorldPoint
    snapshots: list[ObservedRegion]
    steps_per_snapshot: list[int]
    coverage: list[float] = field(default_factory=list)
    steps_taken: int = 0


def coverage_fraction(env: EnvironmentMap, mask: np.ndarray) -> float:
    free = env.cells == CellClass.FREE
    n = int(free.sum())
    return float((mask.astype(bool) & free).sum()) / n if n else 0.0


def random_indoor_point(env: EnvironmentMap, rng: np.random.Generator) -> WorldPoint:
    free = np.argwhere(env.cells == CellClass.FREE)
    i, j = free[int(rng.integers(len(free)))]
    return env.cell_center(int(i), int(j))


class _Walker:
    def __init__(self, env: EnvironmentMap, start, sensor_range_m: float):
        if sensor_range_m <= 0:
            raise ValueError("sensor_range_m must be positive")
        if not point_is_indoor(env, start):
            raise StartOutdoors(f"start {tuple(start)} is not on a free cell")
        self.env = env
        self.pos = env.cell_of(start)
        self.radius = sensor_range_m / env.resolution
        self.mask = np.zeros(env.cells.shape, dtype=np.uint8)
        self.step = 0
        self.done = False

    def advance(self) -> None:
        if self.done:
            return
        if self.step > 0:
            nxt = kernels.frontier_step(self.env.cells, self.mask, *self.pos)
            if nxt[0] < 0:
                self.done = True
                return
            self.pos = (int(nxt[0]), int(nxt[1]))
        kernels.observe(self.env.cells, self.mask, self.pos[0], self.pos[1], self.radius)
        self.step += 1


def explore(env: EnvironmentMap, start=None, steps=(0, 50, 100, 150, 200),
            sensor_range_m: float = 2.5, seed: int = 0, map_id: str = "map") -> ExplorationRun:
    """Snapshots of the observed region after each requested step count.

    ``seed`` only picks the start cell when ``start`` is None; the walk
    itself has no randomness. Exploration stops early when no frontier
    remains, and later snapshots repeat the final mask.
    """
    steps = [int(s) for s in steps]
    if steps != sorted(steps) or any(s < 0 for s in steps):
        raise ValueError("steps must be nonnegative and sorted ascending")
    if start is None:
        start = random_indoor_point(env, np.random.default_rng(seed))
    start = WorldPoint(float(start[0]), float(start[1]))
    walker = _Walker(env, start, sensor_range_m)
    snaps, cov = [], []
    for s in steps:
        while walker.step < s and not walker.done:
            walker.advance()
        snaps.append(ObservedRegion(walker.mask.astype(bool), s))
        cov.append(coverage_fraction(env, walker.mask))
    return ExplorationRun(map_id, start, snaps, steps, cov, walker.step)


def explore_to_coverage(env: EnvironmentMap, start=None, fractions=(0.0, 0.25, 0.5, 0.75, 1.0),
                        sensor_range_m: float = 2.5, seed: int = 0, map_id: str = "map",
                        max_steps: int = 1_000_000) -> ExplorationRun:
    """Snapshots at the first step whose coverage reaches each fraction.

    A fraction of 0 maps to step 0 (empty mask) and 1 to the completed run.
    """
    fractions = [float(f) for f in fractions]
    if fractions != sorted(fractions) or any(not 0 <= f <= 1 for f in fractions):
        raise ValueError("fractions must be sorted and within [0, 1]")
    if start is None:
        start = random_indoor_point(env, np.random.default_rng(seed))
    start = WorldPoint(float(start[0]), float(start[1]))
    walker = _Walker(env, start, sensor_range_m)
    snaps, steps, cov = [], [], []
    for f in fractions:
        if f > 0:
            while not walker.done and walker.step < max_steps:
                c = coverage_fraction(env, walker.mask)
                if c >= f and f < 1.0:
                    break
                walker.advance()
        snaps.append(ObservedRegion(walker.mask.astype(bool), walker.step))
        steps.append(walker.step)
        cov.append(coverage_fraction(env, walker.mask))
    return ExplorationRun(map_id, start, snaps, steps, cov, walker.step)
