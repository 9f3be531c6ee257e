"""Small feed-forward networks that output a Gaussian mean and log-variance.

Hidden units use ELU. The log-variance head is squashed into
``[LOGVAR_MIN, LOGVAR_MAX]`` (dB^2) by a scaled sigmoid so that the bound
holds during training as well as prediction. Targets are standardized per
network; the loss is the Gaussian negative log-likelihood in those units.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .logistic import TrainHParams, standardizer

LOGVAR_MIN = -4.0
LOGVAR_MAX = 8.0


def _elu(x):
    return np.where(x > 0, x, np.expm1(np.minimum(x, 0.0)))


def _elu_grad(x):
    return np.where(x > 0, 1.0, np.exp(np.minimum(x, 0.0)))


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass
class GaussianMLP:
    in_mean: np.ndarray
    in_scale: np.ndarray
    out_mean: float
    out_scale: float
    weights: list[np.ndarray] = field(default_factory=list)
    biases: list[np.ndarray] = field(default_factory=list)

    @property
    def n_inputs(self) -> int:
        return len(self.in_mean)

    @property
    def hidden(self) -> list[int]:
        return [w.shape[1] for w in self.weights[:-1]]

    # -- parameters as one flat vector, for optimizers and gradient checks --
    def get_flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for pair in zip(self.weights, self.biases) for a in pair])

    def set_flat(self, theta: np.ndarray) -> None:
        k = 0
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            self.weights[i] = theta[k:k + w.size].reshape(w.shape).copy()
            k += w.size
            self.biases[i] = theta[k:k + b.size].copy()
            k += b.size

    def _forward(self, Z):
        acts, pres = [Z], []
        h = Z
        n = len(self.weights)
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            a = h @ w + b
            pres.append(a)
            h = _elu(a) if i < n - 1 else a
            acts.append(h)
        return acts, pres

    def _heads(self, raw):
        mu_z = raw[:, 0]
        s = _sigmoid(raw[:, 1])
        logvar_db = LOGVAR_MIN + (LOGVAR_MAX - LOGVAR_MIN) * s
        return mu_z, logvar_db, s

    def predict(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Mean (dB) and log-variance (dB^2) for each row of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        acts, _ = self._forward((X - self.in_mean) / self.in_scale)
        mu_z, logvar_db, _ = self._heads(acts[-1])
        return mu_z * self.out_scale + self.out_mean, np.clip(logvar_db, LOGVAR_MIN, LOGVAR_MAX)

    def loss_and_grad(self, X, g) -> tuple[float, np.ndarray]:
        """Mean Gaussian NLL on standardized targets and its flat gradient."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        z = (np.asarray(g, dtype=np.float64) - self.out_mean) / self.out_scale
        n = X.shape[0]
        acts, pres = self._forward((X - self.in_mean) / self.in_scale)
        mu, logvar_db, s = self._heads(acts[-1])
        lv = logvar_db - 2.0 * math.log(self.out_scale)
        inv = np.exp(-lv)
        r = z - mu
        loss = 0.5 * float(np.mean(lv + r * r * inv))
        d_raw = np.empty_like(acts[-1])
        d_raw[:, 0] = -r * inv / n
        d_raw[:, 1] = 0.5 * (1.0 - r * r * inv) / n * (LOGVAR_MAX - LOGVAR_MIN) * s * (1.0 - s)
        grads_w, grads_b = [], []
        delta = d_raw
        for i in range(len(self.weights) - 1, -1, -1):
            grads_w.append(acts[i].T @ delta)
            grads_b.append(delta.sum(axis=0))
            if i > 0:
                delta = (delta @ self.weights[i].T) * _elu_grad(pres[i - 1])
        grads_w.reverse()
        grads_b.reverse()
        grad = np.concatenate([a.ravel() for pair in zip(grads_w, grads_b) for a in pair])
        return loss, grad

    def to_dict(self) -> dict:
        return {
            "in_mean": self.in_mean.tolist(),
            "in_scale": self.in_scale.tolist(),
            "out_mean": self.out_mean,
            "out_scale": self.out_scale,
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, d: dict, n_inputs: int, hidden: list[int]) -> "GaussianMLP":
        net = cls(
            np.array(d["in_mean"], dtype=np.float64),
            np.array(d["in_scale"], dtype=np.float64),
            float(d["out_mean"]),
            float(d["out_scale"]),
            [np.array(w, dtype=np.float64) for w in d["weights"]],
            [np.array(b, dtype=np.float64) for b in d["biases"]],
        )
        sizes = [n_inputs] + list(hidden) + [2]
        if net.in_mean.shape != (n_inputs,) or net.in_scale.shape != (n_inputs,):
            raise ValueError("network scaler shape mismatch")
        if len(net.weights) != len(sizes) - 1 or len(net.biases) != len(sizes) - 1:
            raise ValueError("network depth mismatch")
        for w, b, a, c in zip(net.weights, net.biases, sizes[:-1], sizes[1:]):
            if w.shape != (a, c) or b.shape != (c,):
                raise ValueError("network layer shape mismatch")
        return net


def init_network(X, g, hidden: list[int], seed: int) -> GaussianMLP:
    """Seeded uniform init in +-1/sqrt(fan_in); scalers taken from the data."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    g = np.asarray(g, dtype=np.float64)
    in_mean, in_scale = standardizer(X)
    out_mean = float(g.mean())
    out_scale = float(g.std())
    if not out_scale > 0:
        out_scale = 1.0
    rng = np.random.default_rng(seed)
    sizes = [X.shape[1]] + list(hidden) + [2]
    weights, biases = [], []
    for a, c in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / math.sqrt(a)
        weights.append(rng.uniform(-bound, bound, size=(a, c)))
        biases.append(np.zeros(c))
    return GaussianMLP(in_mean, in_scale, out_mean, out_scale, weights, biases)


def fit_network(X, g, hidden: list[int], hp: TrainHParams = TrainHParams()):
    """Mini-batch Adam on the Gaussian NLL. Returns ``(net, epoch_losses)``.

    ``epoch_losses[0]`` is the full-data NLL at initialization and each
    later entry the full-data NLL after an epoch. The learning rate follows
    a cosine decay to 1% of ``hp.lr``. Plain gradient steps do not work
    here: once the variance head nears its floor the mean gradient is scaled
    by 1/sigma^2 and a fixed step either stalls or oscillates.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    g = np.asarray(g, dtype=np.float64)
    net = init_network(X, g, hidden, hp.seed)
    rng = np.random.default_rng(hp.seed + 1)
    theta = net.get_flat()
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    b1, b2, eps = 0.9, 0.999, 1e-8
    n = X.shape[0]
    bs = max(1, min(hp.batch_size, n))
    losses = [net.loss_and_grad(X, g)[0]]
    t = 0
    for epoch in range(hp.epochs):
        lr = hp.lr * (0.01 + 0.99 * 0.5 * (1.0 + math.cos(math.pi * epoch / max(hp.epochs, 1))))
        order = rng.permutation(n)
        for start in range(0, n, bs):
            idx = order[start:start + bs]
            _, grad = net.loss_and_grad(X[idx], g[idx])
            grad = grad + hp.l2 * theta
            t += 1
            m = b1 * m + (1 - b1) * grad
            v = b2 * v + (1 - b2) * grad * grad
            theta = theta - lr * (m / (1 - b1 ** t)) / (np.sqrt(v / (1 - b2 ** t)) + eps)
            net.set_flat(theta)
        losses.append(net.loss_and_grad(X, g)[0])
    return net, losses
