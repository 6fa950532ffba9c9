"""Model inputs: three sibling measurements, four per-well means, depth.

Column layout of every feature matrix (width 8)::

    [sibling_1, sibling_2, sibling_3, mean_NPHI, mean_GR, mean_RHOB, mean_VP, depth]

Siblings are the three non-target properties in NPHI, GR, RHOB, VP order.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .wells import PROPERTIES, PropertyKind, WellLog

N_FEATURES = 8
SIBLING_COLUMNS = slice(0, 3)


class EmptyDatasetError(ValueError):
    pass


def siblings(target: PropertyKind) -> tuple[PropertyKind, ...]:
    return tuple(k for k in PROPERTIES if k != target)


def feature_names(target: PropertyKind) -> list[str]:
    return ([k.value for k in siblings(target)]
            + [f"mean_{k.value}" for k in PROPERTIES] + ["depth"])


class RobustScaler:
    """Median centring and interquartile-range scaling, per column.

    Quantiles use linear interpolation (position q*(n-1)).  Columns with a
    zero IQR are only centred.
    """

    def __init__(self, center=None, scale=None):
        self.center = None if center is None else np.asarray(center, dtype=np.float64)
        self.scale = None if scale is None else np.asarray(scale, dtype=np.float64)

    def fit(self, X) -> "RobustScaler":
        X = _as_matrix(X)
        if X.shape[0] == 0:
            raise ValueError("cannot fit a scaler on zero rows")
        q1, med, q3 = np.quantile(X, [0.25, 0.5, 0.75], axis=0, method="linear")
        iqr = q3 - q1
        self.center = med
        self.scale = np.where(iqr > 0, iqr, 1.0)
        return self

    def _check(self, X):
        X = _as_matrix(X)
        if self.center is None:
            raise ValueError("scaler is not fitted")
        if X.shape[1] != self.center.shape[0]:
            raise ValueError(f"expected {self.center.shape[0]} columns, got {X.shape[1]}")
        return X

    def transform(self, X) -> np.ndarray:
        X = self._check(X)
        return (X - self.center) / self.scale

    def inverse_transform(self, X) -> np.ndarray:
        X = self._check(X)
        return X * self.scale + self.center

    def to_dict(self) -> dict:
        return {"center": self.center.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "RobustScaler":
        return cls(d["center"], d["scale"])


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ValueError(f"expected a 2-d feature matrix, got shape {X.shape}")
    return X


def fit_scaler(values) -> RobustScaler:
    return RobustScaler().fit(values)


def transform(scaler: RobustScaler, row) -> np.ndarray:
    """Apply ``(x - center) / scale`` to a single row or a matrix."""
    arr = np.asarray(row, dtype=np.float64)
    if arr.ndim == 1:
        if arr.shape[0] != scaler.center.shape[0]:
            raise ValueError(f"expected {scaler.center.shape[0]} values, got {arr.shape[0]}")
        return (arr - scaler.center) / scaler.scale
    return scaler.transform(arr)


@dataclass
class Dataset:
    target: PropertyKind
    X: np.ndarray
    y: np.ndarray
    wells: np.ndarray  # well name per row
    rows: np.ndarray  # row index within its well

    def __len__(self) -> int:
        return self.X.shape[0]

    def provenance(self) -> set[tuple[str, int]]:
        return set(zip(self.wells.tolist(), self.rows.tolist()))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["well", "row"] + feature_names(self.target) + [f"target_{self.target.value}"])
        for name, row, x, y in zip(self.wells.tolist(), self.rows.tolist(), self.X.tolist(), self.y.tolist()):
            w.writerow([name, row] + [repr(v) for v in x] + [repr(y)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Dataset":
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        target = PropertyKind(header[-1].removeprefix("target_"))
        recs = list(reader)
        if not recs:
            raise EmptyDatasetError("dataset file has no rows")
        wells = np.array([r[0] for r in recs], dtype=object)
        rows = np.array([int(r[1]) for r in recs], dtype=np.int64)
        X = np.array([[float(v) for v in r[2:2 + N_FEATURES]] for r in recs])
        y = np.array([float(r[-1]) for r in recs])
        return cls(target, X, y, wells, rows)


def well_means(well: WellLog, excluded_rows=None) -> np.ndarray:
    """Mean of every property over its measured rows, skipping excluded rows."""
    M = well.matrix()
    if excluded_rows is not None and len(excluded_rows):
        M = M.copy()
        M[np.asarray(list(excluded_rows), dtype=np.int64)] = np.nan
    counts = (~np.isnan(M)).sum(axis=0)
    sums = np.nansum(M, axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)


def feature_matrix(well: WellLog, target: PropertyKind, rows, means: np.ndarray,
                   sibling_source: WellLog | None = None) -> np.ndarray:
    """Raw (unscaled) features for the given rows.

    ``sibling_source`` supplies the three sibling values (defaults to ``well``);
    evaluation passes the pre-injection well here.
    """
    rows = np.asarray(rows, dtype=np.int64)
    src = well if sibling_source is None else sibling_source
    sib = np.column_stack([src[k][rows] for k in siblings(target)]) if rows.size else np.zeros((0, 3))
    mean_block = np.broadcast_to(means, (rows.size, len(PROPERTIES)))
    depth = well.depths[rows][:, None]
    return np.hstack([sib, mean_block, depth])


def build_dataset(wells: list[WellLog], target: PropertyKind,
                  exclude: set[tuple[str, int]] | frozenset = frozenset()) -> Dataset:
    """One row per depth sample with the target and all three siblings measured."""
    X_parts, y_parts, w_parts, r_parts = [], [], [], []
    by_well: dict[str, list[int]] = {}
    for name, row in exclude:
        by_well.setdefault(name, []).append(row)
    for well in wells:
        excluded = by_well.get(well.name, [])
        M = well.matrix()
        ok = ~np.isnan(M).any(axis=1)
        if excluded:
            ok[np.asarray(excluded, dtype=np.int64)] = False
        rows = np.flatnonzero(ok)
        if rows.size == 0:
            continue
        means = well_means(well, excluded)
        X_parts.append(feature_matrix(well, target, rows, means))
        y_parts.append(well[target][rows])
        w_parts.append(np.full(rows.size, well.name, dtype=object))
        r_parts.append(rows)
    if not X_parts:
        raise EmptyDatasetError(f"no eligible rows for target {target.value}")
    return Dataset(target, np.vstack(X_parts), np.concatenate(y_parts),
                   np.concatenate(w_parts), np.concatenate(r_parts))
