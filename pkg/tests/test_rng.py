import numpy as np
import pytest
from hypothesis import given, strategies as st

from wellfill.rng import StableRng, child_seed

# Frozen stream values: any change here breaks byte-reproducibility of experiments.
FROZEN_UNIFORM_SEED_42 = [0.7739560485559633, 0.4388784397520523, 0.8585979199113825]
FROZEN_CHILD_SEED = 9413859321347585592


def test_uniform_matches_raw_word_formula():
    words = np.random.PCG64(42).random_raw(5)
    expected = [(int(w) >> 11) / 2.0 ** 53 for w in words]
    assert StableRng(42).uniform(5).tolist() == expected


def test_frozen_stream():
    assert StableRng(42).uniform(3).tolist() == FROZEN_UNIFORM_SEED_42
    assert child_seed(7, "model", "W-1", "GR") == FROZEN_CHILD_SEED


def test_same_seed_same_stream_and_children_independent_of_order():
    a, b = StableRng(9), StableRng(9)
    assert np.array_equal(a.normal(size=11), b.normal(size=11))
    assert a.child("x").uniform() == StableRng(9).child("x").uniform()
    assert child_seed(1, "a", "b") != child_seed(1, "b", "a")


@given(st.integers(0, 2**64 - 1), st.integers(1, 300))
def test_uniform_range_and_permutation(seed, n):
    r = StableRng(seed)
    u = r.uniform(n)
    assert np.all((u >= 0) & (u < 1))
    assert sorted(r.permutation(n).tolist()) == list(range(n))
    ints = r.integers(7, n)
    assert ints.min() >= 0 and ints.max() < 7


def test_normal_moments():
    z = StableRng(5).normal(size=200_000)
    assert abs(z.mean()) < 0.01
    assert abs(z.std() - 1.0) < 0.01
    assert StableRng(5).normal(3.0, 2.0) == pytest.approx(3.0 + 2.0 * StableRng(5).normal())
