"""Command-line entry point: genmaps, explore, trace, dataset, train, eval, predict, demo."""
from __future__ import annotations

import argparse
import configparser
import dataclasses
import json
import logging
import sys
import time
from pathlib import Path

from . import envmap, evaluation, explorer, features, predictor, raytrace
from .dataset import build_dataset, default_splits, read_dataset_csv, write_dataset_csv
from .logistic import LOGISTIC_DEFAULTS, TrainHParams
from .pipeline import train_model

log = logging.getLogger("partialchan")

# section -> {key: default}; every run writes the resolved values to resolved_config.ini
DEFAULTS = {
    "floorplan": dataclasses.asdict(envmap.FloorplanParams()),
    "tracer": dataclasses.asdict(raytrace.TracerConfig()),
    "explorer": {"sensor_range_m": 2.5, "schedule": "coverage", "fractions": "0,0.25,0.5,0.75,1",
                 "steps": "0,50,100,150,200"},
    "dataset": {"n_train_maps": 8, "n_test_maps": 4, "links_per_map": 400},
    "train": {"lr": 1e-2, "epochs": 500, "l2": 1e-4, "batch_size": 64,
              "logistic_lr": LOGISTIC_DEFAULTS.lr, "logistic_epochs": LOGISTIC_DEFAULTS.epochs},
}

DEMO_OVERRIDES = {"dataset": {"n_train_maps": 4, "n_test_maps": 2, "links_per_map": 100}}


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        self.exit(2, f"error: {message}\n")


def _coerce(value, like):
    if isinstance(like, bool):
        return str(value).lower() in ("1", "true", "yes", "on")
    if isinstance(like, int):
        return int(value)
    if isinstance(like, float):
        return float(value)
    return str(value)


def resolve_config(path: str | None, overrides: dict, base: dict | None = None) -> dict:
    """Defaults, then ``base`` (per-command defaults), then the config file, then flags."""
    cfg = {sec: dict(vals) for sec, vals in DEFAULTS.items()}
    for sec, vals in (base or {}).items():
        cfg[sec].update(vals)
    if path:
        p = Path(path)
        if not p.exists():
            raise CliError(f"config file not found: {p}")
        cp = configparser.ConfigParser()
        cp.read(p)
        for sec in cp.sections():
            if sec not in cfg:
                raise CliError(f"{p}: unknown config section [{sec}]")
            for key, val in cp.items(sec):
                if key not in cfg[sec]:
                    raise CliError(f"{p}: unknown key '{key}' in [{sec}]")
                cfg[sec][key] = _coerce(val.strip().strip('"'), DEFAULTS[sec][key])
    for sec, vals in overrides.items():
        for key, val in vals.items():
            if val is not None:
                cfg[sec][key] = _coerce(val, DEFAULTS[sec][key])
    return cfg


def write_resolved(cfg: dict, out: Path, extra: dict) -> None:
    cp = configparser.ConfigParser()
    for sec, vals in cfg.items():
        cp[sec] = {k: str(v) for k, v in vals.items()}
    cp["run"] = {k: str(v) for k, v in extra.items()}
    with open(out / "resolved_config.ini", "w") as fh:
        cp.write(fh)


def _floats(s: str) -> list[float]:
    return [float(x) for x in s.split(",") if x.strip()]


def _point(s: str) -> envmap.WorldPoint:
    try:
        x, y = (float(v) for v in s.split(","))
    except ValueError:
        raise CliError(f"expected a point as 'x,y', got {s!r}") from None
    return envmap.WorldPoint(x, y)


def _hp(cfg: dict, seed: int) -> tuple[TrainHParams, TrainHParams]:
    t = cfg["train"]
    return (
        TrainHParams(t["lr"], t["epochs"], t["l2"], seed, t["batch_size"]),
        TrainHParams(t["logistic_lr"], t["logistic_epochs"], t["l2"], seed),
    )


def _load_map(path) -> envmap.EnvironmentMap:
    p = Path(path)
    if not p.exists():
        raise CliError(f"map file not found: {p}")
    return envmap.load_map(p)


def _run_exploration(env, map_id, cfg, seed, start=None):
    ex = cfg["explorer"]
    if ex["schedule"] == "coverage":
        return explorer.explore_to_coverage(env, start, _floats(ex["fractions"]), ex["sensor_range_m"], seed, map_id)
    if ex["schedule"] == "steps":
        return explorer.explore(env, start, [int(s) for s in _floats(ex["steps"])], ex["sensor_range_m"], seed, map_id)
    raise CliError(f"unknown explorer schedule {ex['schedule']!r}")


# -- subcommands --------------------------------------------------------------

def cmd_genmaps(args, cfg, out):
    params = envmap.FloorplanParams(**cfg["floorplan"])
    n = args.n if args.n is not None else cfg["dataset"]["n_train_maps"] + cfg["dataset"]["n_test_maps"]
    d = out / "maps"
    d.mkdir(parents=True, exist_ok=True)
    for k in range(n):
        env = envmap.generate_floorplan(args.seed * 1000 + k, params)
        envmap.save_map(env, d / f"map{k:03d}.json")
    print(f"wrote {n} maps to {d}")


def _write_run(run, env, d: Path):
    d.mkdir(parents=True, exist_ok=True)
    for stage, snap in enumerate(run.snapshots):
        envmap.save_region(snap, env, d / f"{run.map_id}_step{snap.step_index}.json")


def cmd_explore(args, cfg, out):
    env = _load_map(args.map)
    map_id = args.map_id or Path(args.map).stem
    run = _run_exploration(env, map_id, cfg, args.seed, _point(args.start) if args.start else None)
    _write_run(run, env, out / "snapshots")
    for s, c in zip(run.steps_per_snapshot, run.coverage):
        print(f"{map_id} step={s} coverage={c:.4f}")


def cmd_trace(args, cfg, out):
    env = _load_map(args.map)
    tcfg = raytrace.TracerConfig(**cfg["tracer"])
    ps = raytrace.trace(env, _point(args.tx), _point(args.rx), tcfg)
    text = raytrace.pathset_to_json(ps)
    out.mkdir(parents=True, exist_ok=True)
    (out / "pathset.json").write_text(text + "\n")
    print(text)


def _maps_from_dir(d) -> list[tuple[str, envmap.EnvironmentMap]]:
    d = Path(d)
    if not d.is_dir():
        raise CliError(f"maps directory not found: {d}")
    files = sorted(d.glob("*.json"))
    if not files:
        raise CliError(f"no map files in {d}")
    return [(f.stem, envmap.load_map(f)) for f in files]


def _runs_from_snapshots(maps, d):
    d = Path(d)
    runs = []
    for map_id, env in maps:
        files = sorted(d.glob(f"{map_id}_step*.json"), key=lambda f: int(f.stem.rsplit("_step", 1)[1]))
        if not files:
            raise CliError(f"no snapshots for {map_id} in {d}")
        snaps = [envmap.load_region(f) for f in files]
        cov = [explorer.coverage_fraction(env, s.mask) for s in snaps]
        runs.append(explorer.ExplorationRun(map_id, envmap.WorldPoint(0.0, 0.0), snaps,
                                            [s.step_index for s in snaps], cov))
    return runs


def _make_dataset(maps, cfg, seed, snapshots_dir=None):
    if snapshots_dir:
        runs = _runs_from_snapshots(maps, snapshots_dir)
    else:
        runs = [_run_exploration(env, m, cfg, seed * 1000 + k) for k, (m, env) in enumerate(maps)]
    splits = default_splits([m for m, _ in maps], cfg["dataset"]["n_test_maps"])
    tcfg = raytrace.TracerConfig(**cfg["tracer"])
    return runs, build_dataset(maps, runs, cfg["dataset"]["links_per_map"], tcfg, seed, splits)


def cmd_dataset(args, cfg, out):
    maps = _maps_from_dir(args.maps)
    _, records = _make_dataset(maps, cfg, args.seed, args.snapshots)
    out.mkdir(parents=True, exist_ok=True)
    write_dataset_csv(records, out / "dataset.csv")
    print(f"wrote {len(records)} records to {out / 'dataset.csv'}")


def _read_records(path):
    p = Path(path)
    if not p.exists():
        raise CliError(f"dataset file not found: {p}")
    return read_dataset_csv(p)


def cmd_train(args, cfg, out):
    records = _read_records(args.dataset)
    net_hp, log_hp = _hp(cfg, args.seed)
    model = train_model(records, net_hp, log_hp, cfg["tracer"]["g_min_db"])
    out.mkdir(parents=True, exist_ok=True)
    predictor.save_model(model, out / "model.json")
    print(f"wrote {out / 'model.json'}")


def _load_model(path):
    p = Path(path)
    if not p.exists():
        raise CliError(f"model file not found: {p}")
    return predictor.load_model(p)


def _print_metrics(rows):
    for r in rows:
        print(f"{r.split:5s} stage={r.stage} step={r.step:5d} coverage={r.coverage_frac:.3f} "
              f"n={r.n_links:5d} acc={r.ls_accuracy:.4f} rmse_db={r.gain_rmse_db:.3f}")


def cmd_eval(args, cfg, out):
    records = _read_records(args.dataset)
    model = _load_model(args.model)
    rows = evaluation.evaluate(records, model, use_indoor=not args.no_indoor)
    out.mkdir(parents=True, exist_ok=True)
    evaluation.write_metrics_csv(rows, out / "metrics.csv")
    _print_metrics(rows)


def cmd_predict(args, cfg, out):
    env = _load_map(args.map)
    model = _load_model(args.model)
    region = envmap.load_region(args.region) if args.region else envmap.ObservedRegion.empty(env)
    tcfg = raytrace.TracerConfig(**cfg["tracer"])
    tx = _point(args.tx)
    indoor = None if args.no_indoor else model.indoor
    if args.rx:
        fv = features.extract_features(env, region, tx, _point(args.rx), tcfg)
        pred = predictor.predict(fv, model, indoor)
        print(json.dumps({
            "features": {"s_hat": fv.s_hat.name, "d_unobs_m": fv.d_unobs, "d_m": fv.d, "g_hat_db": fv.g_hat_omni},
            "posterior": dict(zip(("LOS", "NLOS", "Outage"), pred.posterior)),
            "mean_db": dict(zip(("LOS", "NLOS", "Outage"), pred.mean_db)),
            "log_variance": {"LOS": pred.log_variance[0], "NLOS": pred.log_variance[1]},
            "p_indoor": pred.p_indoor,
            "state": pred.state.name,
        }, indent=2))
        return
    rows = evaluation.coverage_grid(env, region, tx, model, tcfg, args.stride, use_indoor=not args.no_indoor)
    out.mkdir(parents=True, exist_ok=True)
    evaluation.write_grid_csv(rows, out / "coverage_grid.csv")
    print(f"wrote {len(rows)} cells to {out / 'coverage_grid.csv'}")


def cmd_demo(args, cfg, out):
    t0 = time.time()
    params = envmap.FloorplanParams(**cfg["floorplan"])
    n = cfg["dataset"]["n_train_maps"] + cfg["dataset"]["n_test_maps"]
    maps = [(f"map{k:03d}", envmap.generate_floorplan(args.seed * 1000 + k, params)) for k in range(n)]
    (out / "maps").mkdir(parents=True, exist_ok=True)
    for m, env in maps:
        envmap.save_map(env, out / "maps" / f"{m}.json")
    runs, records = _make_dataset(maps, cfg, args.seed)
    for run, (_, env) in zip(runs, maps):
        _write_run(run, env, out / "snapshots")
    write_dataset_csv(records, out / "dataset.csv")
    # train and evaluate from the CSV so the demo matches train/eval run separately
    records = read_dataset_csv(out / "dataset.csv")
    net_hp, log_hp = _hp(cfg, args.seed)
    model = train_model(records, net_hp, log_hp, cfg["tracer"]["g_min_db"])
    predictor.save_model(model, out / "model.json")
    rows = evaluation.evaluate(records, model)
    evaluation.write_metrics_csv(rows, out / "metrics.csv")
    _print_metrics(rows)
    log.info("demo finished in %.1f s", time.time() - t0)


COMMANDS = {
    "genmaps": cmd_genmaps, "explore": cmd_explore, "trace": cmd_trace, "dataset": cmd_dataset,
    "train": cmd_train, "eval": cmd_eval, "predict": cmd_predict, "demo": cmd_demo,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master random seed")
    common.add_argument("--config", help="INI/TOML-style config with [floorplan], [tracer], [explorer], "
                                         "[dataset], [train] sections")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--log-level", default="WARNING")
    common.add_argument("--links-per-map", type=int)
    common.add_argument("--max-order", type=int, help="maximum reflection order")

    p = _Parser(prog="partialchan", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("genmaps", parents=[common], help="generate BSP floorplans")
    s.add_argument("--n", type=int, help="number of maps (default: train + test maps)")

    s = sub.add_parser("explore", parents=[common], help="simulate exploration on one map")
    s.add_argument("--map", required=True)
    s.add_argument("--map-id")
    s.add_argument("--start", help="agent start 'x,y' (default: random indoor cell)")
    s.add_argument("--schedule", choices=["coverage", "steps"])
    s.add_argument("--steps", help="comma-separated step counts")
    s.add_argument("--fractions", help="comma-separated coverage fractions")

    s = sub.add_parser("trace", parents=[common], help="ray trace one link and print its PathSet")
    s.add_argument("--map", required=True)
    s.add_argument("--tx", required=True)
    s.add_argument("--rx", required=True)

    s = sub.add_parser("dataset", parents=[common], help="build a labelled link dataset")
    s.add_argument("--maps", required=True, help="directory of map JSON files")
    s.add_argument("--snapshots", help="directory of {map_id}_step{n}.json regions (default: explore)")
    s.add_argument("--n-test-maps", type=int)

    s = sub.add_parser("train", parents=[common], help="train the model bundle")
    s.add_argument("--dataset", required=True)
    s.add_argument("--epochs", type=int)
    s.add_argument("--lr", type=float)

    s = sub.add_parser("eval", parents=[common], help="write metrics.csv")
    s.add_argument("--dataset", required=True)
    s.add_argument("--model", required=True)
    s.add_argument("--no-indoor", action="store_true", help="disable the indoor/outdoor correction")

    s = sub.add_parser("predict", parents=[common], help="predict one link or a coverage grid")
    s.add_argument("--map", required=True)
    s.add_argument("--model", required=True)
    s.add_argument("--region", help="observed-region JSON (default: nothing observed)")
    s.add_argument("--tx", required=True)
    s.add_argument("--rx", help="single RX 'x,y'; omit for a coverage grid")
    s.add_argument("--stride", type=int, default=1)
    s.add_argument("--no-indoor", action="store_true")

    sub.add_parser("demo", parents=[common], help="small end-to-end run")
    return p


def _overrides(args) -> dict:
    return {
        "tracer": {"max_reflection_order": getattr(args, "max_order", None)},
        "dataset": {"links_per_map": getattr(args, "links_per_map", None),
                    "n_test_maps": getattr(args, "n_test_maps", None)},
        "explorer": {"schedule": getattr(args, "schedule", None), "steps": getattr(args, "steps", None),
                     "fractions": getattr(args, "fractions", None)},
        "train": {"epochs": getattr(args, "epochs", None), "lr": getattr(args, "lr", None)},
    }


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out)
    try:
        base = DEMO_OVERRIDES if args.command == "demo" else None
        cfg = resolve_config(args.config, _overrides(args), base)
        out.mkdir(parents=True, exist_ok=True)
        write_resolved(cfg, out, {"command": args.command, "seed": args.seed})
        COMMANDS[args.command](args, cfg, out)
    except (CliError, envmap.MapError, raytrace.InvalidEndpoint, predictor.PredictorError,
            evaluation.EmptyInput, explorer.StartOutdoors, ValueError, OSError) as e:
        print(json.dumps({"error": type(e).__name__, "message": str(e)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
