import math

import numpy as np
import pytest

from wellfill.models import MlpModel, MlpTrainingError, TrainConfig, fit_mlp, predict
from wellfill.models.mlp import Nadam, forward, init_params, loss_and_grads
from wellfill.rng import StableRng

import oracles


def _params(seed, widths=(8, 20, 15, 1)):
    params = init_params(list(widths), StableRng(seed))
    rng = np.random.default_rng(seed)
    return [(W, rng.normal(scale=0.1, size=b.shape)) for W, b in params]


def test_init_is_he_uniform_and_seeded():
    params = init_params([8, 20, 15, 1], StableRng(3))
    assert [W.shape for W, _ in params] == [(8, 20), (20, 15), (15, 1)]
    for W, b in params:
        assert np.abs(W).max() <= math.sqrt(6.0 / W.shape[0])
        assert not b.any()
    again = init_params([8, 20, 15, 1], StableRng(3))
    assert all(np.array_equal(W, V) for (W, _), (V, _) in zip(params, again))


def test_forward_matches_loop_oracle():
    params = _params(1)
    X = np.random.default_rng(1).normal(size=(12, 8))
    assert np.allclose(forward(params, X), oracles.mlp_forward_loops(params, X), rtol=0, atol=1e-12)


def test_gradients_match_finite_differences():
    params = _params(2)
    rng = np.random.default_rng(2)
    X = rng.normal(size=(5, 8))
    y = rng.normal(size=5)
    _, grads = loss_and_grads(params, X, y)
    numeric = oracles.finite_difference_grads(lambda p: oracles.mse_of(p, X, y), params)
    assert oracles.max_relative_error(grads, numeric) < 1e-4


def test_nadam_first_step_by_hand():
    p = [(np.array([[1.0]]), np.array([0.5]))]
    g = [(np.array([[0.2]]), np.array([-0.4]))]
    opt = Nadam(p, lr=0.01, beta1=0.9, beta2=0.999, eps=1e-7)
    (W, b), = opt.step(p, g)
    # t=1: m = 0.1 g, v = 0.001 g^2, m_hat = 0.9 m / (1 - 0.81) + 0.1 g / 0.1, v_hat = g^2
    for old, grad, new in ((1.0, 0.2, W[0, 0]), (0.5, -0.4, b[0])):
        m_hat = 0.9 * 0.1 * grad / 0.19 + grad
        expected = old - 0.01 * m_hat / (abs(grad) + 1e-7)
        assert new == pytest.approx(expected, rel=1e-12)


def test_patience_zero_trains_one_epoch():
    rng = np.random.default_rng(0)
    X = rng.uniform(size=(60, 8))
    m = fit_mlp(X, X.sum(axis=1), TrainConfig(patience=0))
    assert m.epochs_trained == 1 and len(m.val_history) == 1


def test_linear_target_long_training():
    rng = np.random.default_rng(0)
    X = rng.uniform(0, 1, size=(400, 8))
    y = X @ rng.normal(size=8) * 0.5 + 0.2
    m = fit_mlp(X, y, TrainConfig(epochs=300, patience=300))
    assert np.mean((m.predict(X) - y) ** 2) < 1e-3


def test_early_stopping_restores_best_epoch():
    rng = np.random.default_rng(4)
    X = rng.uniform(size=(80, 8))
    y = rng.normal(size=80)  # pure noise: validation loss soon stops improving
    m = fit_mlp(X, y, TrainConfig(epochs=200, patience=5))
    assert m.epochs_trained < 200
    assert m.epochs_trained - m.best_epoch == 5
    assert m.val_history[m.best_epoch - 1] == min(m.val_history)


def test_bit_reproducible_and_round_trip():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(100, 8))
    y = np.tanh(X[:, 0]) + X[:, 1]
    cfg = TrainConfig(epochs=15, seed=9)
    a, b = fit_mlp(X, y, cfg), fit_mlp(X, y, cfg)
    assert a.to_dict() == b.to_dict()
    back = MlpModel.from_dict(a.to_dict())
    assert np.array_equal(back.predict(X), a.predict(X))
    assert fit_mlp(X, y, TrainConfig(epochs=15, seed=10)).to_dict() != a.to_dict()


def test_divergence_reports_epoch_and_rate():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(50, 8)) * 1e3
    with pytest.raises(MlpTrainingError, match=r"epoch \d+ \(learning rate 1e\+150\)"):
        fit_mlp(X, X[:, 0], TrainConfig(learning_rate=1e150, epochs=50, patience=50))


def test_config_validation_and_errors():
    for bad in (dict(epochs=0), dict(validation_fraction=0.0), dict(validation_fraction=0.6), dict(patience=-1),
                dict(beta1=1.0), dict(learning_rate=0.0)):
        with pytest.raises(ValueError):
            TrainConfig(**bad)
    cfg = TrainConfig(hidden=(4, 3), seed=2)
    assert TrainConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValueError):
        fit_mlp(np.zeros((9, 8)), np.zeros(9))
    m = fit_mlp(np.random.default_rng(0).normal(size=(20, 8)), np.arange(20.0), TrainConfig(epochs=2, hidden=(4,)))
    assert m.widths == [8, 4, 1]
    with pytest.raises(ValueError):
        predict(m, np.zeros((3, 5)))
