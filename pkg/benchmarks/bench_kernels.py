"""Compare the compiled and pure-Python kernel backends on the same workload.

    python3 benchmarks/bench_kernels.py [--links 200] [--seed 0]
"""
import argparse
import time

import numpy as np

from partialchan.envmap import CellClass, generate_floorplan
from partialchan.kernels import available_backends


def _workload(seed, n):
    env = generate_floorplan(seed)
    rng = np.random.default_rng(seed)
    free = np.argwhere(env.cells == CellClass.FREE)
    pick = free[rng.integers(len(free), size=(n, 2))]
    pts = pick[..., ::-1] + rng.uniform(0.05, 0.95, size=(n, 2, 2))  # (u, v) grid coordinates
    return env, pts


def _time(fn, repeat=3):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--links", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    env, pts = _workload(args.seed, args.links)
    cells = np.ascontiguousarray(env.cells)
    faces = env.faces
    mask = np.zeros_like(cells)
    mask[: cells.shape[0] // 2] = 1
    backends = available_backends()
    results = {}
    for name, k in backends.items():
        n = len(pts) if name != "python" else max(len(pts) // 10, 1)
        sub = pts[:n]
        jobs = {
            "segment_clear": lambda: [k.segment_clear(cells, *p[0], *p[1]) for p in sub],
            "unobserved_length": lambda: [k.unobserved_length(mask, *p[0], *p[1]) for p in sub],
            "image_paths(order 2)": lambda: [k.image_paths(cells, faces, *p[0], *p[1], 2) for p in sub],
        }
        for job, fn in jobs.items():
            results.setdefault(job, {})[name] = _time(fn) / n
    names = list(backends)
    print(f"{'kernel':24s}" + "".join(f"{n + ' [us/call]':>22s}" for n in names) + ("   speedup" if len(names) > 1 else ""))
    for job, r in results.items():
        line = f"{job:24s}" + "".join(f"{r[n] * 1e6:22.1f}" for n in names)
        if "cython" in r and "python" in r:
            line += f"{r['python'] / r['cython']:9.0f}x"
        print(line)


if __name__ == "__main__":
    main()
