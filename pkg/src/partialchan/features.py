"""Partial-map feature extraction: (s_hat, d_unobs, d, g_hat_omni)."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

from . import kernels
from .envmap import EnvironmentMap, ObservedRegion, OutOfBounds, fill_free_space
from .raytrace import LinkState, MapKind, TracerConfig, link_state, omni_gain, trace

FEATURE_CSV_COLUMNS = ["link_id", "s_hat", "d_unobs_m", "d_m", "g_hat_db"]

# Features (and stored ground-truth gains) are kept at 1e-6 m / 1e-6 dB, the
# CSV precision, so links whose distances differ only by rounding noise get
# identical inputs and a CSV round trip is exact.
DECIMALS = 6


def quantize(x: float) -> float:
    return round(float(x), DECIMALS)


@dataclass(frozen=True)
class FeatureVector:
    s_hat: LinkState
    d_unobs: float
    d: float
    g_hat_omni: float


def unobserved_los_distance(region: ObservedRegion, tx, rx, resolution: float,
                            origin=(0.0, 0.0)) -> float:
    """Length in meters of the straight tx-rx chord lying over unobserved cells."""
    H, W = region.mask.shape
    pts = []
    for name, p in (("tx", tx), ("rx", rx)):
        u = (p[0] - origin[0]) / resolution
        v = (p[1] - origin[1]) / resolution
        if not (math.isfinite(u) and math.isfinite(v) and 0 <= u <= W and 0 <= v <= H):
            raise OutOfBounds(f"{name} {tuple(p)} outside the observed-region grid")
        pts.append((u, v))
    # the kernel sums length over cells equal to 0; walking the mask and its
    # complement and rescaling to the exact chord makes the empty and full
    # masks give exactly d and 0
    seen = region.mask.astype("uint8")
    (u0, v0), (u1, v1) = pts
    unobs = kernels.unobserved_length(seen, u0, v0, u1, v1)
    obs = kernels.unobserved_length(1 - seen, u0, v0, u1, v1)
    if unobs == 0.0:
        return 0.0
    d = math.hypot(rx[0] - tx[0], rx[1] - tx[1])
    return d if obs == 0.0 else d * (unobs / (unobs + obs))

def extract_features(env: EnvironmentMap, region: ObservedRegion, tx, rx,
                     cfg: TracerConfig = TracerConfig(), filled: EnvironmentMap | None = None) -> FeatureVector:
    """Trace the free-space-filled map and summarise it.

    ``filled`` may carry a precomputed ``fill_free_space(env, region)`` when
    many links share one snapshot.
    """
    region.check_matches(env)
    if filled is None:
        filled = fill_free_space(env, region)
    ps = trace(filled, tx, rx, cfg, MapKind.PARTIAL)
    d = math.hypot(rx[0] - tx[0], rx[1] - tx[1])
    d_unobs = unobserved_los_distance(region, tx, rx, env.resolution, env.origin)
    return FeatureVector(link_state(ps, cfg), quantize(min(d_unobs, d)), quantize(d), quantize(omni_gain(ps, cfg)))


def write_feature_csv(path, rows) -> None:
    """``rows`` is an iterable of (link_id, FeatureVector)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FEATURE_CSV_COLUMNS)
        for link_id, fv in rows:
            w.writerow([link_id, int(fv.s_hat), f"{fv.d_unobs:.6f}", f"{fv.d:.6f}", f"{fv.g_hat_omni:.6f}"])


def read_feature_csv(path) -> list[tuple[str, FeatureVector]]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append((row["link_id"], FeatureVector(
                LinkState(int(row["s_hat"])), float(row["d_unobs_m"]), float(row["d_m"]), float(row["g_hat_db"])
            )))
    return out
