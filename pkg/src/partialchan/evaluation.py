"""Accuracy / RMSE tables versus exploration stage, and coverage grids."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .envmap import CellClass, EnvironmentMap, ObservedRegion, fill_free_space
from .features import extract_features
from .predictor import ChannelModel, features_to_arrays, point_estimates, predict_arrays
from .raytrace import TracerConfig


class EmptyInput(ValueError):
    pass


@dataclass(frozen=True)
class MetricsRow:
    split: str
    stage: int
    step: int
    coverage_frac: float
    n_links: int
    ls_accuracy: float
    gain_rmse_db: float
    confusion: np.ndarray  # rows: true state, columns: predicted state


METRICS_COLUMNS = ["split", "stage", "step", "coverage_frac", "n_links", "ls_accuracy", "gain_rmse_db"] + [
    f"cm_{t}_{p}" for t in ("los", "nlos", "out") for p in ("los", "nlos", "out")
]


def predict_records(records, model, use_indoor: bool = True) -> dict:
    """Predictions for a list of LinkRecords.

    ``model`` is a ChannelModel, or any callable mapping records to a dict
    with ``posterior`` (n, 3) and ``mean_db`` (n, 3) arrays.
    """
    if not isinstance(model, ChannelModel):
        return model(records)
    arrs = features_to_arrays(r.features for r in records)
    return predict_arrays(arrs, model, model.indoor if use_indoor else None)


def _metrics(records, pred) -> tuple[float, float, np.ndarray]:
    s_pred, g_pred = point_estimates(pred)
    s_true = np.array([int(r.true_s) for r in records])
    g_true = np.array([r.true_g_omni for r in records])
    acc = float(np.mean(s_pred == s_true))
    rmse = float(np.sqrt(np.mean((g_pred - g_true) ** 2)))
    cm = np.zeros((3, 3), dtype=np.int64)
    np.add.at(cm, (s_true, s_pred), 1)
    return acc, rmse, cm


def evaluate(records, model, use_indoor: bool = True) -> list[MetricsRow]:
    """One row per (split, stage).

    The predicted state is the posterior argmax with ties resolved toward
    LOS, then NLOS. The gain is the mean of the network routed by that state
    (g_min for Outage); outage records are included in the RMSE.
    """
    records = list(records)
    if not records:
        raise EmptyInput("no records to evaluate")
    pred = predict_records(records, model, use_indoor)
    groups: dict[tuple[str, int], list[int]] = {}
    for k, r in enumerate(records):
        groups.setdefault((r.split, r.stage), []).append(k)
    rows = []
    for (split, stage) in sorted(groups):
        idx = np.array(groups[(split, stage)])
        sub = [records[k] for k in idx]
        p = {k: v[idx] for k, v in pred.items() if isinstance(v, np.ndarray)}
        acc, rmse, cm = _metrics(sub, p)
        rows.append(MetricsRow(
            split, stage,
            int(round(float(np.mean([r.step for r in sub])))),
            float(np.mean([r.coverage for r in sub])),
            len(sub), acc, rmse, cm,
        ))
    return rows


def outdoor_outage_accuracy(records, model, use_indoor: bool = True) -> float:
    """Fraction of outdoor-RX records whose predicted state is Outage."""
    out = [r for r in records if not r.rx_is_indoor]
    if not out:
        raise EmptyInput("no outdoor records")
    s_pred, _ = point_estimates(predict_records(out, model, use_indoor))
    return float(np.mean(s_pred == 2))


def write_metrics_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRICS_COLUMNS)
        for r in rows:
            w.writerow([r.split, r.stage, r.step, f"{r.coverage_frac:.6f}", r.n_links,
                        f"{r.ls_accuracy:.6f}", f"{r.gain_rmse_db:.6f}"] + [int(x) for x in r.confusion.ravel()])


def read_metrics_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# -- coverage grids -------------------------------------------------------------

GRID_COLUMNS = ["x", "y", "p_los", "p_nlos", "p_out", "mean_db", "log_var"]


def grid_cells(env: EnvironmentMap, stride: int) -> list[tuple[int, int]]:
    """Free cells on a stride lattice anchored at the first free cell (row-major)."""
    if stride < 1:
        raise ValueError("cell_stride must be >= 1")
    free = np.argwhere(env.cells == CellClass.FREE)
    if len(free) == 0:
        return []
    i0, j0 = free[0]
    return [(int(i), int(j)) for i, j in free if (i - i0) % stride == 0 and (j - j0) % stride == 0]


def coverage_grid(env: EnvironmentMap, region: ObservedRegion, tx, model: ChannelModel,
                  cfg: TracerConfig = TracerConfig(), cell_stride: int = 1, use_indoor: bool = True) -> list[dict]:
    """Predictions at free-cell centres; ``mean_db``/``log_var`` follow the argmax state."""
    filled = fill_free_space(env, region)
    pts, fvs = [], []
    for i, j in grid_cells(env, cell_stride):
        rx = env.cell_center(i, j)
        if rx == tuple(tx):
            continue
        pts.append(rx)
        fvs.append(extract_features(env, region, tx, rx, cfg, filled=filled))
    if not pts:
        return []
    pred = predict_arrays(features_to_arrays(fvs), model, model.indoor if use_indoor else None)
    s, g = point_estimates(pred)
    lv = pred["log_variance"][np.arange(len(s)), s]
    return [
        {"x": p.x, "y": p.y, "p_los": float(pr[0]), "p_nlos": float(pr[1]), "p_out": float(pr[2]),
         "mean_db": float(gg), "log_var": float(v), "features": fv}
        for p, pr, gg, v, fv in zip(pts, pred["posterior"], g, lv, fvs)
    ]


def write_grid_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(GRID_COLUMNS)
        for r in rows:
            w.writerow([f"{r[c]:.6f}" for c in GRID_COLUMNS])
