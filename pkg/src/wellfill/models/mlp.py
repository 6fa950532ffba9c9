"""Fully connected relu network trained with Nadam and early stopping."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..rng import StableRng

LAYERS = (8, 20, 15, 1)


class MlpTrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    batch_size: int = 32
    patience: int = 10
    validation_fraction: float = 0.1
    learning_rate: float = 0.002
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7
    hidden: tuple[int, ...] = (20, 15)
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.patience < 0:
            raise ValueError("epochs and batch_size must be >= 1, patience >= 0")
        if not 0 < self.validation_fraction <= 0.5:
            raise ValueError("validation_fraction must lie in (0, 0.5]")
        if not (self.learning_rate > 0 and 0 < self.beta1 < 1 and 0 < self.beta2 < 1 and self.epsilon > 0):
            raise ValueError("invalid Nadam parameters")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        d["hidden"] = tuple(d.get("hidden", (20, 15)))
        return cls(**d)


def init_params(widths, rng: StableRng) -> list[tuple[np.ndarray, np.ndarray]]:
    """He-uniform weights, U(-sqrt(6/fan_in), +sqrt(6/fan_in)); zero biases."""
    params = []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        limit = math.sqrt(6.0 / fan_in)
        W = rng.uniform_range(-limit, limit, fan_in * fan_out).reshape(fan_in, fan_out)
        params.append((W, np.zeros(fan_out)))
    return params


def forward(params, X) -> np.ndarray:
    """relu on every hidden layer, identity on the output; returns shape (n,)."""
    h = X
    last = len(params) - 1
    for i, (W, b) in enumerate(params):
        h = h @ W + b
        if i < last:
            h = np.maximum(h, 0.0)
    return h[:, 0]


def loss_and_grads(params, X, y):
    """Mean squared error and its gradient with respect to every weight and bias."""
    acts = [X]
    pre = []
    h = X
    last = len(params) - 1
    for i, (W, b) in enumerate(params):
        z = h @ W + b
        pre.append(z)
        h = np.maximum(z, 0.0) if i < last else z
        acts.append(h)
    out = h[:, 0]
    diff = out - y
    n = X.shape[0]
    loss = float(diff @ diff) / n
    delta = (2.0 / n) * diff[:, None]
    grads = [None] * len(params)
    for i in range(last, -1, -1):
        if i < last:
            delta = delta * (pre[i] > 0.0)
        grads[i] = (acts[i].T @ delta, delta.sum(axis=0))
        if i > 0:
            delta = delta @ params[i][0].T
    return loss, grads


class Nadam:
    """Adam with a Nesterov look-ahead on the first moment (no momentum schedule)."""

    def __init__(self, params, lr, beta1, beta2, eps):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = [(np.zeros_like(W), np.zeros_like(b)) for W, b in params]
        self.v = [(np.zeros_like(W), np.zeros_like(b)) for W, b in params]

    def step(self, params, grads):
        self.t += 1
        t, b1, b2 = self.t, self.b1, self.b2
        c1, c1_next, c2 = 1.0 - b1 ** t, 1.0 - b1 ** (t + 1), 1.0 - b2 ** t
        out = []
        for i, (p_pair, g_pair) in enumerate(zip(params, grads)):
            new_pair = []
            for j in range(2):
                p, g = p_pair[j], g_pair[j]
                m = b1 * self.m[i][j] + (1.0 - b1) * g
                v = b2 * self.v[i][j] + (1.0 - b2) * g * g
                self._store(i, j, m, v)
                m_hat = b1 * m / c1_next + (1.0 - b1) * g / c1
                v_hat = v / c2
                new_pair.append(p - self.lr * m_hat / (np.sqrt(v_hat) + self.eps))
            out.append(tuple(new_pair))
        return out

    def _store(self, i, j, m, v):
        mi, vi = list(self.m[i]), list(self.v[i])
        mi[j], vi[j] = m, v
        self.m[i], self.v[i] = tuple(mi), tuple(vi)


@dataclass
class MlpModel:
    """Network plus its own min-max input scaling and standardised target."""

    params: list[tuple[np.ndarray, np.ndarray]]
    x_min: np.ndarray
    x_range: np.ndarray
    y_mean: float
    y_scale: float
    config: TrainConfig = field(default_factory=TrainConfig)
    epochs_trained: int = 0
    best_epoch: int = 0
    val_history: list[float] = field(default_factory=list)

    @property
    def widths(self) -> list[int]:
        return [self.params[0][0].shape[0]] + [W.shape[1] for W, _ in self.params]

    def scale_inputs(self, X) -> np.ndarray:
        return (X - self.x_min) / self.x_range

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.x_min.shape[0]:
            raise ValueError(f"expected (n, {self.x_min.shape[0]}) features, got {X.shape}")
        return forward(self.params, self.scale_inputs(X)) * self.y_scale + self.y_mean

    def to_dict(self) -> dict:
        return {"params": [{"W": W.tolist(), "b": b.tolist()} for W, b in self.params],
                "x_min": self.x_min.tolist(), "x_range": self.x_range.tolist(),
                "y_mean": self.y_mean, "y_scale": self.y_scale, "config": self.config.to_dict(),
                "epochs_trained": self.epochs_trained, "best_epoch": self.best_epoch,
                "val_history": list(self.val_history)}

    @classmethod
    def from_dict(cls, d: dict) -> "MlpModel":
        params = [(np.asarray(p["W"], dtype=np.float64), np.asarray(p["b"], dtype=np.float64))
                  for p in d["params"]]
        return cls(params, np.asarray(d["x_min"], dtype=np.float64), np.asarray(d["x_range"], dtype=np.float64),
                   float(d["y_mean"]), float(d["y_scale"]), TrainConfig.from_dict(d["config"]),
                   int(d["epochs_trained"]), int(d["best_epoch"]), [float(v) for v in d["val_history"]])


def fit_mlp(X, y, config: TrainConfig | None = None) -> MlpModel:
    """Mini-batch Nadam on MSE with a held-out validation split.

    Training stops once ``patience`` consecutive epochs fail to improve the
    validation MSE (so patience 0 trains exactly one epoch) and the weights of
    the best epoch are restored.
    """
    config = config or TrainConfig()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError(f"shape mismatch: X {X.shape}, y {y.shape}")
    n = X.shape[0]
    if n < 10:
        raise ValueError(f"the network needs at least 10 rows, got {n}")
    rng = StableRng(config.seed)
    order = rng.child("split").permutation(n)
    n_val = max(1, int(round(config.validation_fraction * n)))
    val_idx, tr_idx = order[:n_val], order[n_val:]

    x_min = X[tr_idx].min(axis=0)
    x_range = X[tr_idx].max(axis=0) - x_min
    x_range = np.where(x_range > 0, x_range, 1.0)
    y_mean = float(y[tr_idx].mean())
    y_scale = float(y[tr_idx].std())
    y_scale = y_scale if y_scale > 0 else 1.0
    Xs = (X - x_min) / x_range
    ys = (y - y_mean) / y_scale
    X_tr, y_tr, X_val, y_val = Xs[tr_idx], ys[tr_idx], Xs[val_idx], ys[val_idx]

    widths = [X.shape[1], *config.hidden, 1]
    params = init_params(widths, rng.child("init"))
    opt = Nadam(params, config.learning_rate, config.beta1, config.beta2, config.epsilon)
    shuffle_rng = rng.child("shuffle")
    best_loss, best_params, best_epoch, wait = math.inf, params, 0, 0
    history = []
    epoch = 0
    # overflow on the way to a non-finite loss is reported by the checks below
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(1, config.epochs + 1):
            perm = shuffle_rng.permutation(X_tr.shape[0])
            for s in range(0, perm.size, config.batch_size):
                b = perm[s:s + config.batch_size]
                loss, grads = loss_and_grads(params, X_tr[b], y_tr[b])
                if not math.isfinite(loss):
                    raise MlpTrainingError(f"non-finite loss at epoch {epoch} "
                                           f"(learning rate {config.learning_rate:g})")
                params = opt.step(params, grads)
            resid = forward(params, X_val) - y_val
            val_loss = float(resid @ resid) / resid.size
            if not math.isfinite(val_loss):
                raise MlpTrainingError(f"non-finite validation loss at epoch {epoch} "
                                       f"(learning rate {config.learning_rate:g})")
            history.append(val_loss)
            if val_loss < best_loss:
                best_loss, best_params, best_epoch, wait = val_loss, params, epoch, 0
            else:
                wait += 1
            if wait >= config.patience:
                break
    return MlpModel(best_params, x_min, x_range, y_mean, y_scale, config, epoch, best_epoch, history)
