"""Link-state classifier, per-state gain networks and indoor/outdoor correction.

The joint prediction factors as P(s | phi) * p(g | s, phi). The link-state
posterior comes from one softmax model per partial-map state s_hat over
(d, d_unobs). Gains for s in {LOS, NLOS} come from one of four networks
chosen by (s, s_hat):

    s     s_hat        inputs              hidden
    LOS   LOS          d, d_unobs, g_hat   2 x 20
    LOS   NLOS, Out    d                   2 x 10
    NLOS  NLOS, Out    d, d_unobs, g_hat   2 x 20
    NLOS  LOS          d                   2 x 10
    Out   any          constant g_min

With an indoor model, outdoor receivers are taken to be in outage and the
posterior becomes p_in * P(s | .) + (1 - p_in) * [s == Out].
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .features import FeatureVector
from .gaussnet import GaussianMLP, fit_network
from .logistic import LOGISTIC_DEFAULTS, LogisticModel, TrainHParams, fit_logistic
from .raytrace import LinkState

log = logging.getLogger(__name__)

MODEL_FORMAT = "partialchan-model"
MODEL_VERSION = 1
G_MIN_DB = -150.0

STATES = (LinkState.LOS, LinkState.NLOS, LinkState.OUTAGE)


class PredictorError(ValueError):
    pass


class UntrainedModel(PredictorError):
    pass


class EmptyDataset(PredictorError):
    pass


class EmptyStratum(PredictorError):
    pass


class CorruptModelFile(PredictorError):
    pass


@dataclass(frozen=True)
class NetworkSpec:
    key: str
    inputs: tuple[str, ...]
    hidden: tuple[int, ...]
    label: str


NETWORK_SPECS = {
    "los_match": NetworkSpec("los_match", ("d", "d_unobs", "g_hat"), (20, 20), "s=LOS, s_hat=LOS"),
    "los_mismatch": NetworkSpec("los_mismatch", ("d",), (10, 10), "s=LOS, s_hat in {NLOS, Out}"),
    "nlos_match": NetworkSpec("nlos_match", ("d", "d_unobs", "g_hat"), (20, 20), "s=NLOS, s_hat in {NLOS, Out}"),
    "nlos_mismatch": NetworkSpec("nlos_mismatch", ("d",), (10, 10), "s=NLOS, s_hat=LOS"),
}


def gain_route(s: LinkState, s_hat: LinkState) -> str | None:
    """Network key for an (estimated s, partial s_hat) pair; None for outage."""
    s, s_hat = LinkState(s), LinkState(s_hat)
    if s == LinkState.OUTAGE:
        return None
    if s == LinkState.LOS:
        return "los_match" if s_hat == LinkState.LOS else "los_mismatch"
    return "nlos_mismatch" if s_hat == LinkState.LOS else "nlos_match"


def _columns(fv_arrays: dict, inputs) -> np.ndarray:
    return np.column_stack([fv_arrays[name] for name in inputs])


def features_to_arrays(fvs) -> dict:
    fvs = list(fvs)
    return {
        "s_hat": np.array([int(f.s_hat) for f in fvs], dtype=np.int64),
        "d_unobs": np.array([f.d_unobs for f in fvs], dtype=np.float64),
        "d": np.array([f.d for f in fvs], dtype=np.float64),
        "g_hat": np.array([f.g_hat_omni for f in fvs], dtype=np.float64),
    }


# -- model types --------------------------------------------------------------

@dataclass
class LinkStateClassifier:
    strata: dict[LinkState, LogisticModel]

    def posterior(self, s_hat, d, d_unobs) -> np.ndarray:
        s_hat = np.atleast_1d(np.asarray(s_hat, dtype=np.int64))
        X = np.column_stack([np.atleast_1d(d), np.atleast_1d(d_unobs)]).astype(np.float64)
        out = np.empty((len(s_hat), 3))
        for st in STATES:
            sel = s_hat == int(st)
            if np.any(sel):
                out[sel] = self.strata[st].predict_proba(X[sel])
        return out


@dataclass
class GainPredictor:
    networks: dict[str, GaussianMLP]
    g_min_db: float = G_MIN_DB

    def evaluate(self, key: str, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        mean, logvar = self.networks[key].predict(X)
        return np.clip(mean, self.g_min_db, 0.0), logvar


@dataclass
class IndoorClassifier:
    strata: dict[LinkState, LogisticModel]

    def p_indoor(self, s_hat, d_unobs) -> np.ndarray:
        s_hat = np.atleast_1d(np.asarray(s_hat, dtype=np.int64))
        X = np.atleast_1d(np.asarray(d_unobs, dtype=np.float64)).reshape(-1, 1)
        out = np.empty(len(s_hat))
        for st in STATES:
            sel = s_hat == int(st)
            if np.any(sel):
                out[sel] = self.strata[st].predict_proba(X[sel])[:, 1]
        return out


@dataclass
class ChannelModel:
    classifier: LinkStateClassifier | None = None
    gains: GainPredictor | None = None
    indoor: IndoorClassifier | None = None
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ChannelPrediction:
    """Posterior over (LOS, NLOS, Outage) and per-state Gaussian gains.

    ``mean_db[2]`` is g_min with ``log_variance[2] = -inf`` (zero variance).
    """

    posterior: tuple[float, float, float]
    mean_db: tuple[float, float, float]
    log_variance: tuple[float, float, float]
    p_indoor: float = 1.0

    @property
    def state(self) -> LinkState:
        return LinkState(int(np.argmax(self.posterior)))

    @property
    def point_gain_db(self) -> float:
        return self.mean_db[int(self.state)]


# -- prediction ---------------------------------------------------------------

def apply_indoor_correction(posterior: np.ndarray, p_in: np.ndarray) -> np.ndarray:
    posterior = np.atleast_2d(posterior)
    p_in = np.asarray(p_in, dtype=np.float64).reshape(-1, 1)
    out = posterior * p_in
    out[:, 2] += (1.0 - p_in[:, 0])
    return out


def predict_arrays(arrs: dict, model: ChannelModel, indoor: IndoorClassifier | None = None) -> dict:
    """Vectorised prediction over feature arrays (see ``features_to_arrays``)."""
    if model is None or model.classifier is None or model.gains is None:
        raise UntrainedModel("model has no trained link-state classifier and gain predictor")
    s_hat = arrs["s_hat"]
    n = len(s_hat)
    post = model.classifier.posterior(s_hat, arrs["d"], arrs["d_unobs"])
    p_in = np.ones(n)
    if indoor is not None:
        p_in = indoor.p_indoor(s_hat, arrs["d_unobs"])
        post = apply_indoor_correction(post, p_in)
    mean = np.empty((n, 3))
    logvar = np.empty((n, 3))
    mean[:, 2] = model.gains.g_min_db
    logvar[:, 2] = -np.inf
    for s in (LinkState.LOS, LinkState.NLOS):
        keys = np.array([gain_route(s, LinkState(int(h))) for h in s_hat], dtype=object)
        for key in NETWORK_SPECS:
            sel = keys == key
            if np.any(sel):
                X = _columns({k: v[sel] for k, v in arrs.items()}, NETWORK_SPECS[key].inputs)
                mean[sel, int(s)], logvar[sel, int(s)] = model.gains.evaluate(key, X)
    return {"posterior": post, "mean_db": mean, "log_variance": logvar, "p_indoor": p_in}


def predict(fv: FeatureVector, model: ChannelModel, indoor: IndoorClassifier | None = None) -> ChannelPrediction:
    out = predict_arrays(features_to_arrays([fv]), model, indoor)
    return ChannelPrediction(
        tuple(float(x) for x in out["posterior"][0]),
        tuple(float(x) for x in out["mean_db"][0]),
        tuple(float(x) for x in out["log_variance"][0]),
        float(out["p_indoor"][0]),
    )


def point_estimates(pred: dict) -> tuple[np.ndarray, np.ndarray]:
    """Argmax state (ties go LOS < NLOS < Outage) and the gain routed by it."""
    s = np.argmax(pred["posterior"], axis=1)
    return s, pred["mean_db"][np.arange(len(s)), s]


# -- training -----------------------------------------------------------------

def _global_prior(y, n_classes):
    counts = np.bincount(np.asarray(y, dtype=np.int64), minlength=n_classes).astype(np.float64)
    return counts / counts.sum()


def train_link_classifier(rows, hp: TrainHParams = LOGISTIC_DEFAULTS) -> LinkStateClassifier:
    """``rows`` are (FeatureVector, true_s) pairs.

    An s_hat stratum with a single true class becomes a constant predictor;
    an empty one falls back to the class frequencies over all rows.
    """
    rows = list(rows)
    if not rows:
        raise EmptyDataset("no rows to train the link-state classifier")
    arrs = features_to_arrays(fv for fv, _ in rows)
    y = np.array([int(s) for _, s in rows], dtype=np.int64)
    prior = _global_prior(y, 3)
    strata = {}
    for st in STATES:
        sel = arrs["s_hat"] == int(st)
        X = np.column_stack([arrs["d"][sel], arrs["d_unobs"][sel]])
        strata[st], _ = fit_logistic(X, y[sel], 3, hp, fallback_prior=prior)
    return LinkStateClassifier(strata)


def train_indoor_classifier(rows, hp: TrainHParams = LOGISTIC_DEFAULTS) -> IndoorClassifier:
    """``rows`` are (s_hat, d_unobs, rx_is_indoor) triples."""
    rows = list(rows)
    if not rows:
        raise EmptyDataset("no rows to train the indoor classifier")
    s_hat = np.array([int(r[0]) for r in rows], dtype=np.int64)
    d_unobs = np.array([float(r[1]) for r in rows], dtype=np.float64)
    y = np.array([1 if r[2] else 0 for r in rows], dtype=np.int64)
    prior = _global_prior(y, 2)
    strata = {}
    for st in STATES:
        sel = s_hat == int(st)
        strata[st], _ = fit_logistic(d_unobs[sel].reshape(-1, 1), y[sel], 2, hp, fallback_prior=prior)
    return IndoorClassifier(strata)


def _pool_for(key: str, s: np.ndarray) -> np.ndarray:
    target = LinkState.LOS if key.startswith("los") else LinkState.NLOS
    return s == int(target)


def train_gain_predictor(rows, hp: TrainHParams = TrainHParams(), allow_fallback: bool = True,
                         g_min_db: float = G_MIN_DB) -> GainPredictor:
    """``rows`` are (FeatureVector, true_s, true_g_omni) triples.

    Outage rows are dropped. Each network trains on the rows that the
    routing table sends to it under the true state. If a stratum is empty
    and ``allow_fallback`` is set, its network trains on every row with the
    same true state instead; otherwise EmptyStratum is raised.
    """
    rows = [r for r in rows if LinkState(r[1]) != LinkState.OUTAGE]
    arrs = features_to_arrays(fv for fv, _, _ in rows)
    s = np.array([int(r[1]) for r in rows], dtype=np.int64)
    g = np.array([float(r[2]) for r in rows], dtype=np.float64)
    keys = np.array([gain_route(LinkState(a), LinkState(b)) for a, b in zip(s, arrs["s_hat"])], dtype=object)
    nets = {}
    for i, (key, spec) in enumerate(NETWORK_SPECS.items()):
        sel = keys == key
        if not np.any(sel):
            if not allow_fallback:
                raise EmptyStratum(f"no training rows for gain network '{key}' ({spec.label})")
            sel = _pool_for(key, s)
            if not np.any(sel):
                raise EmptyStratum(f"no training rows for gain network '{key}' ({spec.label}) or its fallback pool")
            log.warning("gain network %s has no rows; training on all rows with the same true state", key)
        X = _columns({k: v[sel] for k, v in arrs.items()}, spec.inputs)
        sub = TrainHParams(hp.lr, hp.epochs, hp.l2, hp.seed + 101 * i, hp.batch_size)
        nets[key], _ = fit_network(X, g[sel], list(spec.hidden), sub)
    return GainPredictor(nets, g_min_db)


# -- bundle I/O ---------------------------------------------------------------

def model_to_dict(model: ChannelModel) -> dict:
    if model.classifier is None or model.gains is None:
        raise UntrainedModel("cannot save an untrained model")
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "g_min_db": model.gains.g_min_db,
        "link_classifier": {st.name: model.classifier.strata[st].to_dict() for st in STATES},
        "gain_networks": {k: model.gains.networks[k].to_dict() for k in NETWORK_SPECS},
        "indoor": None if model.indoor is None else {st.name: model.indoor.strata[st].to_dict() for st in STATES},
        "meta": model.meta,
    }


def model_from_dict(d: dict) -> ChannelModel:
    if not isinstance(d, dict) or d.get("format") != MODEL_FORMAT:
        raise CorruptModelFile("not a partialchan model bundle")
    if d.get("version") != MODEL_VERSION:
        raise CorruptModelFile(f"model version {d.get('version')!r} does not match supported version {MODEL_VERSION}")
    try:
        clf = LinkStateClassifier({st: LogisticModel.from_dict(d["link_classifier"][st.name], 2, 3) for st in STATES})
        nets = {
            k: GaussianMLP.from_dict(d["gain_networks"][k], len(spec.inputs), list(spec.hidden))
            for k, spec in NETWORK_SPECS.items()
        }
        indoor = None
        if d.get("indoor") is not None:
            indoor = IndoorClassifier({st: LogisticModel.from_dict(d["indoor"][st.name], 1, 2) for st in STATES})
        return ChannelModel(clf, GainPredictor(nets, float(d["g_min_db"])), indoor, dict(d.get("meta") or {}))
    except (KeyError, TypeError, ValueError) as e:
        raise CorruptModelFile(f"malformed model bundle: {e}") from None


def save_model(model: ChannelModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1, sort_keys=True))


def load_model(path) -> ChannelModel:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise CorruptModelFile(f"{path}: cannot parse model file ({e.msg})") from None
    return model_from_dict(d)
