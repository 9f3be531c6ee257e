"""End-to-end orchestration shared by the CLI and the acceptance suite."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .dataset import LinkRecord, build_dataset, default_splits
from .envmap import FloorplanParams, generate_floorplan
from .explorer import explore, explore_to_coverage
from .logistic import LOGISTIC_DEFAULTS, TrainHParams
from .predictor import ChannelModel, train_gain_predictor, train_indoor_classifier, train_link_classifier
from .raytrace import TracerConfig

log = logging.getLogger(__name__)


@dataclass
class PipelineConfig:
    n_train_maps: int = 8
    n_test_maps: int = 4
    links_per_map: int = 400
    seed: int = 0
    floorplan: FloorplanParams = field(default_factory=FloorplanParams)
    tracer: TracerConfig = field(default_factory=TracerConfig)
    sensor_range_m: float = 2.5
    schedule: str = "coverage"  # "coverage" or "steps"
    fractions: tuple[float, ...] = (0.0, 0.25, 0.5, 0.75, 1.0)
    steps: tuple[int, ...] = (0, 50, 100, 150, 200)
    net_hp: TrainHParams = field(default_factory=TrainHParams)
    logistic_hp: TrainHParams = LOGISTIC_DEFAULTS


def make_maps(cfg: PipelineConfig):
    n = cfg.n_train_maps + cfg.n_test_maps
    return [(f"map{k:03d}", generate_floorplan(cfg.seed * 1000 + k, cfg.floorplan)) for k in range(n)]


def make_runs(maps, cfg: PipelineConfig):
    runs = []
    for k, (map_id, env) in enumerate(maps):
        if cfg.schedule == "coverage":
            run = explore_to_coverage(env, None, cfg.fractions, cfg.sensor_range_m, seed=cfg.seed * 1000 + k,
                                      map_id=map_id)
        elif cfg.schedule == "steps":
            run = explore(env, None, cfg.steps, cfg.sensor_range_m, seed=cfg.seed * 1000 + k, map_id=map_id)
        else:
            raise ValueError(f"unknown schedule {cfg.schedule!r}")
        runs.append(run)
    return runs


def make_dataset(cfg: PipelineConfig):
    maps = make_maps(cfg)
    runs = make_runs(maps, cfg)
    splits = default_splits([m for m, _ in maps], cfg.n_test_maps)
    records = build_dataset(maps, runs, cfg.links_per_map, cfg.tracer, cfg.seed, splits)
    return maps, runs, records


def train_model(records: list[LinkRecord], net_hp: TrainHParams = TrainHParams(),
                logistic_hp: TrainHParams = LOGISTIC_DEFAULTS, g_min_db: float = -150.0) -> ChannelModel:
    """Fit all three models on the train split.

    The link-state classifier and gain networks see indoor-RX links only;
    the indoor classifier sees every train link.
    """
    train = [r for r in records if r.split == "train"]
    indoor = [r for r in train if r.rx_is_indoor]
    log.info("training on %d links (%d indoor RX)", len(train), len(indoor))
    clf = train_link_classifier([(r.features, r.true_s) for r in indoor], logistic_hp)
    gains = train_gain_predictor([(r.features, r.true_s, r.true_g_omni) for r in indoor], net_hp, g_min_db=g_min_db)
    ind = train_indoor_classifier([(r.features.s_hat, r.features.d_unobs, r.rx_is_indoor) for r in train],
                                  logistic_hp)
    return ChannelModel(clf, gains, ind, {"n_train_links": len(train)})
