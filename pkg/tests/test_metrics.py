import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wellfill.metrics import UndefinedMape, mape, mape_detail, mse

import oracles


def test_mse_examples():
    assert mse([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0
    assert mse([1, 2], [2, 4]) == 2.5
    with pytest.raises(ValueError):
        mse([], [])
    with pytest.raises(ValueError):
        mse([1, 2], [1])


def test_mape_examples():
    assert mape([100, 200], [110, 180]) == pytest.approx(10.0, abs=1e-12)
    assert mape([3.0, -4.0], [3.0, -4.0]) == 0.0
    with pytest.raises(UndefinedMape):
        mape([0], [1])


def test_mape_excludes_near_zero_truths():
    d = mape_detail([0.0, 1e-13, 50.0, -20.0], [5.0, 1.0, 55.0, -25.0])
    assert (d.n_used, d.n_excluded) == (2, 2)
    assert d.value == pytest.approx(100 * (0.1 + 0.25) / 2, abs=1e-12)


finite = st.floats(-1e6, 1e6, allow_nan=False)


@given(st.lists(st.tuples(finite, finite), min_size=1, max_size=50))
def test_mse_matches_exact_arithmetic(pairs):
    t, p = zip(*pairs)
    exact = float(oracles.mse_exact(t, p))
    assert mse(t, p) == pytest.approx(exact, rel=1e-12, abs=1e-300)
    assert mse(t, p) >= 0


@given(st.lists(st.tuples(finite.filter(lambda v: abs(v) > 1e-6), finite), min_size=1, max_size=50))
def test_mape_matches_exact_arithmetic(pairs):
    t, p = zip(*pairs)
    assert mape(t, p) == pytest.approx(float(oracles.mape_exact(t, p)), rel=1e-12, abs=1e-12)
    assert mape(t, p) >= 0
