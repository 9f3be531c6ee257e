"""Labelled link datasets across exploration snapshots."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .envmap import CellClass, EnvironmentMap, WorldPoint, fill_free_space, point_is_indoor
from .explorer import ExplorationRun
from .features import FeatureVector, extract_features, quantize
from .raytrace import LinkState, TracerConfig, link_state, omni_gain, trace

CSV_COLUMNS = [
    "map_id", "step", "tx_x", "tx_y", "rx_x", "rx_y", "s_hat", "d_unobs_m", "d_m", "g_hat_db",
    "true_s", "true_g_db", "rx_indoor", "split", "stage", "coverage_frac",
]


@dataclass(frozen=True)
class LinkRecord:
    map_id: str
    step: int
    tx: WorldPoint
    rx: WorldPoint
    features: FeatureVector
    true_s: LinkState
    true_g_omni: float
    rx_is_indoor: bool
    split: str
    stage: int = 0
    coverage: float = 0.0
    link_index: int = 0


def _jittered(env: EnvironmentMap, cells: np.ndarray, rng: np.random.Generator) -> WorldPoint:
    i, j = cells[int(rng.integers(len(cells)))]
    u, v = rng.uniform(0.05, 0.95, size=2)
    return WorldPoint(env.origin[0] + (j + u) * env.resolution, env.origin[1] + (i + v) * env.resolution)


def sample_links(env: EnvironmentMap, n: int, rng: np.random.Generator) -> list[tuple[WorldPoint, WorldPoint]]:
    """TX uniform over indoor area, RX uniform over all non-wall area."""
    free = np.argwhere(env.cells == CellClass.FREE)
    open_ = np.argwhere(env.cells != CellClass.WALL)
    out = []
    while len(out) < n:
        tx = _jittered(env, free, rng)
        rx = _jittered(env, open_, rng)
        if tx != rx:
            out.append((tx, rx))
    return out


def default_splits(map_ids, n_test: int | None = None) -> dict[str, str]:
    """Last third of the maps (8/4 for 12) go to test."""
    map_ids = list(map_ids)
    if n_test is None:
        n_test = len(map_ids) // 3
    return {m: ("test" if k >= len(map_ids) - n_test else "train") for k, m in enumerate(map_ids)}


def build_dataset(maps, runs: list[ExplorationRun], links_per_map: int, cfg: TracerConfig = TracerConfig(),
                  seed: int = 0, splits: dict[str, str] | None = None) -> list[LinkRecord]:
    """``maps`` is a list of (map_id, EnvironmentMap); runs are matched by map_id."""
    maps = list(maps)
    if splits is None:
        splits = default_splits([m for m, _ in maps])
    run_of = {r.map_id: r for r in runs}
    records = []
    for k, (map_id, env) in enumerate(maps):
        run = run_of[map_id]
        rng = np.random.default_rng([seed, k])
        links = sample_links(env, links_per_map, rng)
        truth = []
        for tx, rx in links:
            ps = trace(env, tx, rx, cfg)
            truth.append((link_state(ps, cfg), quantize(omni_gain(ps, cfg)), point_is_indoor(env, rx)))
        for stage, (snap, cov) in enumerate(zip(run.snapshots, run.coverage)):
            filled = fill_free_space(env, snap)
            for li, ((tx, rx), (s, g, indoor)) in enumerate(zip(links, truth)):
                fv = extract_features(env, snap, tx, rx, cfg, filled=filled)
                records.append(LinkRecord(map_id, snap.step_index, tx, rx, fv, s, g, indoor,
                                          splits[map_id], stage, cov, li))
    records.sort(key=lambda r: (r.map_id, r.stage, r.link_index))
    return records


def write_dataset_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in records:
            f = r.features
            w.writerow([
                r.map_id, r.step, f"{r.tx.x:.6f}", f"{r.tx.y:.6f}", f"{r.rx.x:.6f}", f"{r.rx.y:.6f}",
                int(f.s_hat), f"{f.d_unobs:.6f}", f"{f.d:.6f}", f"{f.g_hat_omni:.6f}",
                int(r.true_s), f"{r.true_g_omni:.6f}", int(r.rx_is_indoor), r.split, r.stage,
                f"{r.coverage:.6f}",
            ])


def read_dataset_csv(path) -> list[LinkRecord]:
    out = []
    counters: dict[tuple[str, int], int] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(CSV_COLUMNS[:14]) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            stage = int(row.get("stage") or 0)
            key = (row["map_id"], stage)
            li = counters.get(key, 0)
            counters[key] = li + 1
            out.append(LinkRecord(
                row["map_id"], int(row["step"]),
                WorldPoint(float(row["tx_x"]), float(row["tx_y"])),
                WorldPoint(float(row["rx_x"]), float(row["rx_y"])),
                FeatureVector(LinkState(int(row["s_hat"])), float(row["d_unobs_m"]), float(row["d_m"]),
                              float(row["g_hat_db"])),
                LinkState(int(row["true_s"])), float(row["true_g_db"]), row["rx_indoor"] == "1",
                row["split"], stage, float(row.get("coverage_frac") or 0.0), li,
            ))
    return out
