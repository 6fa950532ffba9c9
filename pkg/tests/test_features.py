import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from wellfill.features import (
    N_FEATURES, Dataset, EmptyDatasetError, RobustScaler, build_dataset, feature_names, fit_scaler, siblings,
    transform, well_means,
)
from wellfill.wells import PROPERTIES, PropertyKind

from conftest import make_well

NPHI, GR, RHOB, VP = PROPERTIES


def _quantile_oracle(col, q):
    s = sorted(col)
    pos = q * (len(s) - 1)
    lo = math.floor(pos)
    hi = min(lo + 1, len(s) - 1)
    return s[lo] + (s[hi] - s[lo]) * (pos - lo)


@pytest.mark.parametrize("col,center,scale", [
    ([1, 2, 3, 4, 100], 3.0, 2.0),
    ([5, 5, 5], 5.0, 1.0),
    ([-1, 1], 0.0, 1.0),
])
def test_fit_scaler_examples(col, center, scale):
    s = fit_scaler(np.array(col, dtype=float)[:, None])
    assert s.center.tolist() == [center]
    assert s.scale.tolist() == [scale]


def test_transform_examples():
    s = RobustScaler([3.0], [2.0])
    assert transform(s, [100.0]).tolist() == [48.5]
    assert transform(s, [3.0]).tolist() == [0.0]
    with pytest.raises(ValueError):
        transform(s, [1.0, 2.0])
    ident = RobustScaler(np.zeros(3), np.ones(3))
    x = np.array([[1.5, -2.0, 7.0]])
    assert np.array_equal(ident.transform(x), x)
    with pytest.raises(ValueError):
        fit_scaler(np.zeros((0, 3)))


@given(arrays(np.float64, st.tuples(st.integers(1, 40), st.integers(1, 4)),
              elements=st.floats(-1e4, 1e4, allow_nan=False)))
def test_scaler_matches_interpolation_oracle_and_inverts(X):
    s = fit_scaler(X)
    for j in range(X.shape[1]):
        q1, q2, q3 = (_quantile_oracle(X[:, j].tolist(), q) for q in (0.25, 0.5, 0.75))
        assert s.center[j] == pytest.approx(q2, rel=1e-12, abs=1e-9)
        iqr = q3 - q1
        assert s.scale[j] == pytest.approx(iqr if iqr > 0 else 1.0, rel=1e-9, abs=1e-9)
    back = s.inverse_transform(s.transform(X))
    assert np.allclose(back, X, rtol=1e-9, atol=1e-9 * np.abs(X).max())


def test_siblings_and_names():
    assert siblings(GR) == (NPHI, RHOB, VP)
    assert feature_names(VP) == ["NPHI", "GR", "RHOB", "mean_NPHI", "mean_GR", "mean_RHOB", "mean_VP", "depth"]


def test_build_dataset_examples():
    w = make_well(n=5)
    d = build_dataset([w], NPHI)
    assert d.X.shape == (5, N_FEATURES) and len(d) == 5
    assert np.array_equal(d.X[:, 0], w[GR]) and np.array_equal(d.y, w[NPHI])
    assert np.array_equal(d.X[:, 7], w.depths)

    w = make_well(n=10, missing={GR: [3]})
    d = build_dataset([w], NPHI)
    assert 3 not in d.rows.tolist() and len(d) == 9

    d = build_dataset([make_well(n=10)], NPHI, exclude={("W-1", 2), ("W-1", 5), ("OTHER", 1)})
    assert d.rows.tolist() == [0, 1, 3, 4, 6, 7, 8, 9]
    with pytest.raises(EmptyDatasetError):
        build_dataset([make_well(n=10, missing={VP: range(10)})], NPHI)


def test_well_means_use_measured_non_excluded_rows():
    w = make_well(n=20, missing={GR: [1, 2, 3]})
    means = well_means(w)
    assert means[1] == pytest.approx(np.nanmean(w[GR]))
    d = build_dataset([w], NPHI, exclude={("W-1", 10)})
    keep = [i for i in range(20) if i != 10]
    assert d.X[0, 3] == pytest.approx(np.mean(w[NPHI][keep]))
    # the GR mean includes rows that are incomplete elsewhere but skips excluded ones
    assert d.X[0, 4] == pytest.approx(np.nanmean(w[GR][keep]))
    assert np.all(d.X[:, 3:7] == d.X[0, 3:7])


def test_dataset_spans_wells_and_csv_round_trip():
    wells = [make_well("A", n=6), make_well("B", n=4, seed=2)]
    d = build_dataset(wells, RHOB)
    assert d.provenance() == {("A", i) for i in range(6)} | {("B", i) for i in range(4)}
    for name in ("A", "B"):
        block = d.X[d.wells == name, 3:7]
        assert np.all(block == block[0])
    back = Dataset.from_csv(d.to_csv())
    assert back.target is RHOB
    assert np.array_equal(back.X, d.X) and np.array_equal(back.y, d.y)
    assert back.provenance() == d.provenance()
