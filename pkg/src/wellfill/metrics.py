"""Error metrics for gap predictions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAPE_EPS = 1e-12


class UndefinedMape(ValueError):
    pass


def _pair(truth, predicted):
    t = np.asarray(truth, dtype=np.float64).ravel()
    p = np.asarray(predicted, dtype=np.float64).ravel()
    if t.shape != p.shape:
        raise ValueError(f"length mismatch: {t.size} truths, {p.size} predictions")
    if t.size == 0:
        raise ValueError("metrics need at least one value")
    return t, p


def mse(truth, predicted) -> float:
    t, p = _pair(truth, predicted)
    d = t - p
    return float(d @ d) / d.size


@dataclass(frozen=True)
class MapeResult:
    value: float
    n_used: int
    n_excluded: int


def mape_detail(truth, predicted, eps: float = MAPE_EPS) -> MapeResult:
    """Percentage error over rows with |truth| > eps; the rest are counted, not used."""
    t, p = _pair(truth, predicted)
    keep = np.abs(t) > eps
    if not keep.any():
        raise UndefinedMape("MAPE is undefined: every true value is (near) zero")
    rel = np.abs(t[keep] - p[keep]) / np.abs(t[keep])
    return MapeResult(100.0 * float(rel.sum()) / rel.size, int(keep.sum()), int((~keep).sum()))


def mape(truth, predicted, eps: float = MAPE_EPS) -> float:
    return mape_detail(truth, predicted, eps).value
