"""Squared-loss gradient tree boosting."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tree import RegressionTree, SplitSearch, fit_tree


@dataclass
class GradientBoostedEnsemble:
    init: float
    trees: list[RegressionTree]
    learning_rate: float
    n_features: int
    train_mse: list[float] = field(default_factory=list)  # entry 0 is the constant model

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(f"expected (n, {self.n_features}) features, got {X.shape}")
        out = np.full(X.shape[0], self.init)
        for tree in self.trees:
            out += self.learning_rate * tree.predict(X)
        return out

    def to_dict(self) -> dict:
        return {"init": self.init, "learning_rate": self.learning_rate, "n_features": self.n_features,
                "trees": [t.to_dict() for t in self.trees], "train_mse": list(self.train_mse)}

    @classmethod
    def from_dict(cls, d: dict) -> "GradientBoostedEnsemble":
        return cls(float(d["init"]), [RegressionTree.from_dict(t) for t in d["trees"]],
                   float(d["learning_rate"]), int(d["n_features"]), [float(v) for v in d["train_mse"]])


def fit_gb(X, y, n_trees: int = 100, learning_rate: float = 0.1, max_depth: int = 3,
           min_samples_split: int = 2) -> GradientBoostedEnsemble:
    """Fit each tree to the residuals of the ensemble so far.

    With squared loss the residual is the negative gradient, and a tree whose
    leaves hold residual means can only lower the training error when added
    with a step in (0, 1], so ``train_mse`` never increases.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError(f"shape mismatch: X {X.shape}, y {y.shape}")
    if X.shape[0] < 2:
        raise ValueError("gradient boosting needs at least 2 rows")
    if n_trees < 0 or not learning_rate > 0:
        raise ValueError("n_trees must be >= 0 and learning_rate > 0")
    init = float(y.mean())
    pred = np.full(y.shape[0], init)
    resid = y - pred
    trace = [float(resid @ resid) / y.shape[0]]
    splitter = SplitSearch(X)
    trees = []
    for _ in range(n_trees):
        tree = fit_tree(X, resid, max_depth, min_samples_split, splitter=splitter)
        pred = pred + learning_rate * tree.predict(X)
        resid = y - pred
        trees.append(tree)
        trace.append(float(resid @ resid) / y.shape[0])
    return GradientBoostedEnsemble(init, trees, float(learning_rate), X.shape[1], trace)
