"""Finite-difference gradient checks and learnability of the from-scratch trainers."""
import numpy as np
import pytest

from partialchan.gaussnet import LOGVAR_MAX, LOGVAR_MIN, fit_network, init_network
from partialchan.logistic import LOGISTIC_DEFAULTS, TrainHParams, fit_logistic, softmax_loss_grad
from partialchan.features import FeatureVector
from partialchan.predictor import (EmptyDataset, train_gain_predictor, train_indoor_classifier,
                                   train_link_classifier)
from partialchan.raytrace import LinkState


def _rel_err(a, b):
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-300))


def _fd(f, theta, h):
    g = np.zeros_like(theta)
    for k in range(theta.size):
        e = np.zeros_like(theta)
        e[k] = h
        g[k] = (f(theta + e) - f(theta - e)) / (2 * h)
    return g


@pytest.mark.parametrize("k,K", [(2, 3), (1, 2)])
def test_logistic_gradient_matches_finite_differences(k, K):
    rng = np.random.default_rng(k)
    X = rng.normal(size=(40, k))
    Y = np.eye(K)[rng.integers(K, size=40)]
    for _ in range(10):
        W = rng.normal(size=(K, k))
        b = rng.normal(size=K)

        def f(theta):
            return softmax_loss_grad(theta[:K * k].reshape(K, k), theta[K * k:], X, Y, 1e-2)[0]

        _, gW, gb = softmax_loss_grad(W, b, X, Y, 1e-2)
        theta = np.concatenate([W.ravel(), b])
        assert _rel_err(np.concatenate([gW.ravel(), gb]), _fd(f, theta, 1e-6)) <= 1e-6


@pytest.mark.parametrize("n_in,hidden", [(3, [20, 20]), (1, [10, 10])])
def test_nll_gradient_matches_finite_differences(n_in, hidden):
    rng = np.random.default_rng(n_in)
    X = rng.normal(size=(30, n_in)) * 3 + 5
    g = -80 + 10 * rng.normal(size=30)
    net = init_network(X, g, hidden, seed=0)
    for _ in range(10):
        theta = rng.normal(size=net.get_flat().size) * 0.5

        def f(t):
            net.set_flat(t)
            return net.loss_and_grad(X, g)[0]

        num = _fd(f, theta, 1e-6)
        net.set_flat(theta)
        _, ana = net.loss_and_grad(X, g)
        assert _rel_err(ana, num) <= 1e-5


def test_logistic_separable_and_monotone_loss():
    rng = np.random.default_rng(0)
    d = rng.uniform(0.5, 10, size=400)
    du = rng.uniform(0, 1, size=400) * d
    y = np.where(d < 5, 0, 2)
    model, losses = fit_logistic(np.column_stack([d, du]), y, 3, LOGISTIC_DEFAULTS)
    acc = np.mean(np.argmax(model.predict_proba(np.column_stack([d, du])), axis=1) == y)
    assert acc >= 0.99
    assert all(b <= a for a, b in zip(losses, losses[1:]))
    # a step size far too large still gives a non-increasing record
    _, losses = fit_logistic(np.column_stack([d, du]), y, 3, TrainHParams(lr=500.0, epochs=100))
    assert all(b <= a for a, b in zip(losses, losses[1:]))


def _fv(s_hat, d_unobs, d, g_hat=-80.0):
    return FeatureVector(LinkState(s_hat), float(d_unobs), float(d), float(g_hat))


def test_link_classifier_strata():
    rng = np.random.default_rng(1)
    rows = []
    for d in rng.uniform(0.5, 10, size=300):
        rows.append((_fv(LinkState.LOS, 0.3 * d, d), LinkState.LOS if d < 5 else LinkState.NLOS))
        rows.append((_fv(LinkState.OUTAGE, 0.0, d), LinkState.OUTAGE))
    clf = train_link_classifier(rows)
    d = np.linspace(0.6, 9.9, 50)
    d = d[np.abs(d - 5) > 0.1]
    p = clf.posterior(np.zeros(len(d), int), d, 0.3 * d)
    assert np.mean(np.argmax(p, axis=1) == np.where(d < 5, 0, 1)) >= 0.99
    # single-class stratum: constant p_Out = 1
    assert np.allclose(clf.posterior([2, 2], [1.0, 9.0], [0.0, 0.0]), [[0, 0, 1], [0, 0, 1]])
    # empty NLOS stratum: global class frequencies
    p = clf.posterior([1], [3.0], [1.0])[0]
    assert p.sum() == pytest.approx(1.0) and np.all(p > 0)
    with pytest.raises(EmptyDataset):
        train_link_classifier([])


def test_indoor_classifier():
    rng = np.random.default_rng(2)
    du = rng.uniform(0, 8, size=400)
    ind = train_indoor_classifier([(LinkState.LOS, x, True) for x in du])
    assert np.all(ind.p_indoor(np.zeros(5, int), np.linspace(0, 8, 5)) >= 0.99)
    ind = train_indoor_classifier([(LinkState.LOS, x, x < 3) for x in du])
    pred = ind.p_indoor(np.zeros(len(du), int), du) > 0.5
    assert np.mean(pred == (du < 3)) >= 0.95
    with pytest.raises(EmptyDataset):
        train_indoor_classifier([])


def test_linear_gain_is_learnt():
    rng = np.random.default_rng(3)
    d = rng.uniform(0.5, 10, size=400)
    g = -(60 + 2 * d)
    net, losses = fit_network(d.reshape(-1, 1), g, [10, 10], TrainHParams())
    mean, logvar = net.predict(d.reshape(-1, 1))
    assert np.sqrt(np.mean((mean - g) ** 2)) <= 0.5
    assert np.all((logvar >= LOGVAR_MIN) & (logvar <= LOGVAR_MAX))
    assert losses[-1] <= losses[0] - 0.1 * abs(losses[0])


def test_identity_on_full_observation_is_learnt():
    rng = np.random.default_rng(4)
    d = rng.uniform(0.5, 10, size=400)
    g = -(62 + 20 * np.log10(d)) - rng.uniform(0, 3, size=400)
    X = np.column_stack([d, np.zeros_like(d), g])
    net, _ = fit_network(X, g, [20, 20], TrainHParams())
    mean, _ = net.predict(X)
    assert np.sqrt(np.mean((mean - g) ** 2)) <= 1.0


def test_gain_predictor_nll_drops_per_network():
    rng = np.random.default_rng(5)
    rows = []
    for _ in range(400):
        d = rng.uniform(0.5, 10)
        s, s_hat = LinkState(rng.integers(2)), LinkState(rng.integers(3))
        g = -(60 + 2 * d) - 15 * int(s) - rng.normal(0, 2)
        rows.append((_fv(s_hat, 0.2 * d, d, g + rng.normal(0, 1)), s, g))
    gp = train_gain_predictor(rows, TrainHParams(epochs=100))
    from partialchan.predictor import NETWORK_SPECS, features_to_arrays, gain_route, _columns
    arrs = features_to_arrays(fv for fv, _, _ in rows)
    keys = [gain_route(s, fv.s_hat) for fv, s, _ in rows]
    g = np.array([r[2] for r in rows])
    for key, spec in NETWORK_SPECS.items():
        sel = np.array([k == key for k in keys])
        X = _columns({k: v[sel] for k, v in arrs.items()}, spec.inputs)
        init = init_network(X, g[sel], list(spec.hidden), 0)
        net = gp.networks[key]
        assert net.loss_and_grad(X, g[sel])[0] <= init.loss_and_grad(X, g[sel])[0] - 0.1 * abs(
            init.loss_and_grad(X, g[sel])[0])
