from __future__ import annotations

from dataclasses import dataclass

import numpy as np

RIDGE = 1e-8


@dataclass
class LinearModel:
    intercept: float
    coef: np.ndarray

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.coef.shape[0]:
            raise ValueError(f"expected (n, {self.coef.shape[0]}) features, got {X.shape}")
        return self.intercept + X @ self.coef

    def to_dict(self) -> dict:
        return {"intercept": self.intercept, "coef": self.coef.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "LinearModel":
        return cls(float(d["intercept"]), np.asarray(d["coef"], dtype=np.float64))


def fit_linear(X, y) -> LinearModel:
    """Least squares via the normal equations on centred data.

    Constant columns get a zero coefficient.  A singular or badly conditioned
    Gram matrix falls back to ridge regularisation with lambda = 1e-8.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError(f"shape mismatch: X {X.shape}, y {y.shape}")
    n, p = X.shape
    if n == 0:
        raise ValueError("cannot fit a linear model on zero rows")
    x_mean = X.mean(axis=0)
    y_mean = float(y.mean())
    Xc = X - x_mean
    yc = y - y_mean
    spread = np.abs(Xc).max(axis=0) if n else np.zeros(p)
    live = spread > 1e-12 * np.maximum(np.abs(x_mean), 1.0)
    coef = np.zeros(p)
    if live.any():
        # unit-norm columns so the conditioning test sees collinearity, not units
        norms = np.sqrt((Xc[:, live] ** 2).sum(axis=0))
        A = Xc[:, live] / norms
        gram = A.T @ A
        rhs = A.T @ yc
        try:
            if np.linalg.cond(gram) > 1e12:
                raise np.linalg.LinAlgError("ill-conditioned")
            sol = np.linalg.solve(gram, rhs)
        except np.linalg.LinAlgError:
            sol = np.linalg.solve(gram + RIDGE * np.eye(gram.shape[0]), rhs)
        coef[live] = sol / norms
    return LinearModel(y_mean - float(x_mean @ coef), coef)
