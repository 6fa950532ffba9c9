"""CART-style regression trees with exhaustive split search on squared error."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LEAF = -1


@dataclass
class RegressionTree:
    """Flat array representation; node 0 is the root.

    A sample goes left when ``x[feature] < threshold``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray
    n_features: int
    max_depth: int = 3
    min_samples_split: int = 2

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    def depth(self) -> int:
        def walk(i):
            if self.feature[i] == LEAF:
                return 0
            return 1 + max(walk(self.left[i]), walk(self.right[i]))
        return walk(0)

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by every row."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(f"expected (n, {self.n_features}) features, got {X.shape}")
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        while True:
            f = self.feature[node]
            internal = f != LEAF
            if not internal.any():
                return node
            r = rows[internal]
            n = node[internal]
            go_left = X[r, f[internal]] < self.threshold[n]
            node[internal] = np.where(go_left, self.left[n], self.right[n])

    def predict(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def sse(self, X, y) -> float:
        r = np.asarray(y, dtype=np.float64) - self.predict(X)
        return float(r @ r)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(), "threshold": self.threshold.tolist(),
            "left": self.left.tolist(), "right": self.right.tolist(),
            "value": self.value.tolist(), "n_samples": self.n_samples.tolist(),
            "n_features": self.n_features, "max_depth": self.max_depth,
            "min_samples_split": self.min_samples_split,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RegressionTree":
        return cls(np.asarray(d["feature"], dtype=np.int64), np.asarray(d["threshold"], dtype=np.float64),
                   np.asarray(d["left"], dtype=np.int64), np.asarray(d["right"], dtype=np.int64),
                   np.asarray(d["value"], dtype=np.float64), np.asarray(d["n_samples"], dtype=np.int64),
                   int(d["n_features"]), int(d.get("max_depth", 3)), int(d.get("min_samples_split", 2)))


class SplitSearch:
    """Exhaustive best-split search over presorted feature columns.

    Sorting happens once; each child inherits its parent's sorted index
    lists filtered by the split, which keeps the order without re-sorting.
    """

    def __init__(self, X):
        self.X = np.ascontiguousarray(X, dtype=np.float64)
        if self.X.ndim != 2:
            raise ValueError(f"expected a 2-d feature matrix, got shape {self.X.shape}")
        self.order = np.argsort(self.X, axis=0, kind="stable")

    def node_orders(self, mask: np.ndarray) -> list[np.ndarray]:
        """Per feature, the masked sample indices in ascending feature order."""
        return [o[mask[o]] for o in self.order.T]

    def best(self, mask: np.ndarray, y: np.ndarray):
        """(gain, feature, threshold, node_sse) of the best split, or gain 0 and feature None."""
        return self.best_sorted(self.node_orders(mask), y)

    def best_sorted(self, orders: list[np.ndarray], y: np.ndarray):
        ys_all = y[orders[0]]
        n = ys_all.shape[0]
        mean = ys_all.mean()
        parent_sse = float(((ys_all - mean) ** 2).sum())
        tol = 1e-12 * parent_sse
        best = (0.0, None, 0.0, parent_sse)
        if n < 2 or parent_sse <= 0.0:
            return best
        counts_l = np.arange(1, n, dtype=np.float64)
        counts_r = n - counts_l
        for f, sel in enumerate(orders):
            xs = self.X[sel, f]
            valid = xs[:-1] < xs[1:]
            if not valid.any():
                continue
            cs = np.cumsum(y[sel] - mean)
            total = cs[-1]
            sum_l = cs[:-1]
            gain = sum_l ** 2 / counts_l + (total - sum_l) ** 2 / counts_r - total ** 2 / n
            gain = np.where(valid, gain, -np.inf)
            top = gain.max()
            if top <= best[0] + tol:
                continue
            i = int(np.flatnonzero(gain >= top - tol)[0])
            thr = 0.5 * (xs[i] + xs[i + 1])
            if thr <= xs[i]:
                thr = xs[i + 1]
            best = (float(top), f, float(thr), parent_sse)
        if best[0] <= tol:
            return (0.0, None, 0.0, parent_sse)
        return best


class _Builder:
    def __init__(self, n_features, max_depth, min_samples_split):
        self.nodes = []  # [feature, threshold, left, right, value, n]
        self.n_features = n_features
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split

    def add(self, value, n) -> int:
        self.nodes.append([LEAF, 0.0, LEAF, LEAF, float(value), int(n)])
        return len(self.nodes) - 1

    def tree(self) -> RegressionTree:
        cols = list(zip(*self.nodes))
        return RegressionTree(np.array(cols[0], dtype=np.int64), np.array(cols[1], dtype=np.float64),
                              np.array(cols[2], dtype=np.int64), np.array(cols[3], dtype=np.int64),
                              np.array(cols[4], dtype=np.float64), np.array(cols[5], dtype=np.int64),
                              self.n_features, self.max_depth, self.min_samples_split)


def fit_tree(X, y, max_depth: int = 3, min_samples_split: int = 2, search: str = "greedy",
             splitter: SplitSearch | None = None) -> RegressionTree:
    """Grow a regression tree minimising the sum of squared errors.

    ``search="greedy"`` grows top-down, taking at every node the split with
    the largest SSE reduction among all features and all midpoints between
    consecutive distinct values (ties: lowest feature, then lowest threshold).
    ``search="optimal"`` returns the tree of depth <= 2 with the smallest
    training SSE, found by enumerating every root split; greedy growth can
    miss it because a weak root split may enable much better child splits.

    Growth stops at ``max_depth``, below ``min_samples_split`` samples, or when
    no split reduces the SSE.  Leaves hold the mean target of their samples.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError(f"shape mismatch: X {X.shape}, y {y.shape}")
    if X.shape[0] == 0:
        raise ValueError("cannot fit a tree on zero rows")
    if max_depth < 0 or min_samples_split < 2:
        raise ValueError("max_depth must be >= 0 and min_samples_split >= 2")
    splitter = splitter or SplitSearch(X)
    builder = _Builder(X.shape[1], max_depth, min_samples_split)
    root = np.ones(X.shape[0], dtype=bool)
    if search == "greedy":
        _grow_greedy(builder, splitter, X, y, root, 0)
    elif search == "optimal":
        if max_depth > 2:
            raise ValueError("optimal search is limited to max_depth <= 2")
        _grow_optimal(builder, splitter, X, y, root, max_depth)
    else:
        raise ValueError(f"unknown search {search!r}")
    return builder.tree()


def _grow_greedy(builder, splitter, X, y, mask, depth) -> int:
    return _grow_sorted(builder, splitter, X, y, splitter.node_orders(mask), depth)


def _grow_sorted(builder, splitter, X, y, orders, depth) -> int:
    idx = orders[0]
    node = builder.add(y[idx].mean(), idx.size)
    if depth >= builder.max_depth or idx.size < builder.min_samples_split:
        return node
    gain, f, thr, _ = splitter.best_sorted(orders, y)
    if f is None:
        return node
    go_left = X[:, f] < thr
    left = _grow_sorted(builder, splitter, X, y, [o[go_left[o]] for o in orders], depth + 1)
    right = _grow_sorted(builder, splitter, X, y, [o[~go_left[o]] for o in orders], depth + 1)
    builder.nodes[node][:4] = [f, thr, left, right]
    return node


def _leaf_sse(y):
    return float(((y - y.mean()) ** 2).sum())


def _best_subtree_sse(splitter, X, y, mask, depth, min_split):
    """SSE of the best tree of depth <= ``depth`` (0, 1 or 2) on the masked samples."""
    n = int(mask.sum())
    if depth == 0 or n < min_split:
        return _leaf_sse(y[mask]), None
    if depth == 1:
        gain, f, thr, parent = splitter.best(mask, y)
        return parent - gain, (None if f is None else (f, thr))
    best_sse = _leaf_sse(y[mask])
    tol = 1e-12 * best_sse
    best_split = None
    for f in range(X.shape[1]):
        xs = np.unique(X[mask, f])
        for a, b in zip(xs[:-1], xs[1:]):
            thr = 0.5 * (a + b)
            if thr <= a:
                thr = b
            go_left = X[:, f] < thr
            sl, _ = _best_subtree_sse(splitter, X, y, mask & go_left, depth - 1, min_split)
            sr, _ = _best_subtree_sse(splitter, X, y, mask & ~go_left, depth - 1, min_split)
            if sl + sr < best_sse - tol:
                best_sse, best_split = sl + sr, (f, float(thr))
    return best_sse, best_split


def _grow_optimal(builder, splitter, X, y, mask, depth) -> int:
    n = int(mask.sum())
    node = builder.add(y[mask].mean(), n)
    _, split = _best_subtree_sse(splitter, X, y, mask, depth, builder.min_samples_split)
    if split is None:
        return node
    f, thr = split
    go_left = X[:, f] < thr
    left = _grow_optimal(builder, splitter, X, y, mask & go_left, depth - 1)
    right = _grow_optimal(builder, splitter, X, y, mask & ~go_left, depth - 1)
    builder.nodes[node][:4] = [f, thr, left, right]
    return node
