"""Multinomial logistic regression trained by full-batch gradient descent."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TrainHParams:
    lr: float = 1e-2
    epochs: int = 500
    l2: float = 1e-4
    seed: int = 0
    batch_size: int = 64


LOGISTIC_DEFAULTS = TrainHParams(lr=1.0, epochs=2000, l2=1e-4, seed=0)


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_loss_grad(W, b, X, Y, l2):
    """Mean cross-entropy plus ``l2/2 * |W|^2``, with gradients.

    ``X`` is (n, k) standardized input, ``Y`` is (n, K) one-hot.
    """
    n = X.shape[0]
    P = softmax(X @ W.T + b)
    loss = -np.sum(Y * np.log(np.clip(P, 1e-300, None))) / n + 0.5 * l2 * np.sum(W * W)
    D = (P - Y) / n
    return loss, D.T @ X + l2 * W, D.sum(axis=0)


@dataclass
class LogisticModel:
    """One softmax stratum. ``prior`` replaces the fit when the stratum is degenerate."""

    mean: np.ndarray
    scale: np.ndarray
    weights: np.ndarray | None = None
    bias: np.ndarray | None = None
    prior: np.ndarray | None = None

    @property
    def n_classes(self) -> int:
        return len(self.prior) if self.prior is not None else len(self.bias)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if self.prior is not None:
            return np.tile(self.prior, (X.shape[0], 1))
        Z = (X - self.mean) / self.scale
        return softmax(Z @ self.weights.T + self.bias)

    def to_dict(self) -> dict:
        d = {"mean": self.mean.tolist(), "scale": self.scale.tolist()}
        if self.prior is not None:
            d["prior"] = self.prior.tolist()
        else:
            d["weights"] = self.weights.tolist()
            d["bias"] = self.bias.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict, n_features: int, n_classes: int) -> "LogisticModel":
        mean = np.array(d["mean"], dtype=np.float64)
        scale = np.array(d["scale"], dtype=np.float64)
        if mean.shape != (n_features,) or scale.shape != (n_features,):
            raise ValueError("scaler shape mismatch")
        if "prior" in d:
            prior = np.array(d["prior"], dtype=np.float64)
            if prior.shape != (n_classes,):
                raise ValueError("prior shape mismatch")
            return cls(mean, scale, prior=prior)
        W = np.array(d["weights"], dtype=np.float64)
        b = np.array(d["bias"], dtype=np.float64)
        if W.shape != (n_classes, n_features) or b.shape != (n_classes,):
            raise ValueError("logistic weight shape mismatch")
        return cls(mean, scale, W, b)


def standardizer(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    return mean, scale


def fit_logistic(X, y, n_classes: int, hp: TrainHParams = LOGISTIC_DEFAULTS,
                 fallback_prior: np.ndarray | None = None):
    """Fit one stratum; returns ``(model, losses)``.

    Fewer than two distinct labels gives a constant model at the empirical
    class frequencies (``fallback_prior`` when there are no rows at all).
    A step that raises the loss is rejected and the learning rate halved, so
    ``losses`` is non-increasing.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.int64)
    k = X.shape[1]
    if len(y) == 0:
        if fallback_prior is None:
            raise ValueError("empty stratum with no fallback prior")
        return LogisticModel(np.zeros(k), np.ones(k), prior=np.asarray(fallback_prior, dtype=np.float64)), []
    counts = np.bincount(y, minlength=n_classes).astype(np.float64)
    mean, scale = standardizer(X)
    if np.count_nonzero(counts) < 2:
        return LogisticModel(mean, scale, prior=counts / counts.sum()), []

    Z = (X - mean) / scale
    Y = np.eye(n_classes)[y]
    rng = np.random.default_rng(hp.seed)
    bound = 1.0 / np.sqrt(k)
    W = rng.uniform(-bound, bound, size=(n_classes, k))
    b = np.zeros(n_classes)
    lr = hp.lr
    loss, gW, gb = softmax_loss_grad(W, b, Z, Y, hp.l2)
    losses = [loss]
    for _ in range(hp.epochs):
        W_new, b_new = W - lr * gW, b - lr * gb
        new_loss, new_gW, new_gb = softmax_loss_grad(W_new, b_new, Z, Y, hp.l2)
        if new_loss > loss:
            lr *= 0.5
            losses.append(loss)
            continue
        W, b, loss, gW, gb = W_new, b_new, new_loss, new_gW, new_gb
        losses.append(loss)
    return LogisticModel(mean, scale, W, b), losses
