import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qlock.divergences import (
    InvalidDistributionError,
    as_prob,
    fidelity,
    hellinger,
    kl_divergence,
    min_entropy,
    point_mass,
    shannon_entropy,
    total_variation,
    uniform,
)
from qlock.sampling import sample_simplex


def test_hand_computed_values():
    p = np.array([0.5, 0.5])
    q = np.array([1.0, 0.0])
    assert total_variation(p, q) == pytest.approx(0.5)
    assert fidelity(p, q) == pytest.approx(math.sqrt(0.5))
    assert hellinger(p, q) == pytest.approx(math.sqrt(1 - math.sqrt(0.5)))
    assert kl_divergence(q, p) == pytest.approx(math.log(2))
    assert kl_divergence(p, q) == math.inf
    assert shannon_entropy(p) == pytest.approx(math.log(2))
    assert min_entropy(uniform(8)) == pytest.approx(3.0)
    assert min_entropy(point_mass(2, 4)) == 0.0


def test_hellinger_of_nearby_distributions_is_accurate():
    # sqrt(1 - F) loses all digits here; the sqrt-difference form does not
    p = np.array([0.5, 0.5])
    q = np.array([0.5 + 1e-10, 0.5 - 1e-10])
    # each sqrt coordinate moves by delta / sqrt(2), so D_H = delta / sqrt(2)
    assert hellinger(p, q) == pytest.approx(1e-10 / math.sqrt(2), rel=1e-3)


def test_as_prob_validation():
    with pytest.raises(InvalidDistributionError):
        as_prob([0.5, 0.6])
    with pytest.raises(InvalidDistributionError):
        as_prob([1.1, -0.1])
    np.testing.assert_array_equal(as_prob([1.0, -1e-17]), [1.0, 0.0])


def test_length_mismatch():
    with pytest.raises(ValueError):
        total_variation([1.0], [0.5, 0.5])


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 20), st.integers(0, 2**31))
def test_comparison_chain(d, seed):
    rng = np.random.default_rng(seed)
    p, q = sample_simplex(d, rng, size=2)
    h, tv = hellinger(p, q), total_variation(p, q)
    assert h**2 <= tv + 1e-12
    assert tv <= math.sqrt(2) * h + 1e-12
    assert h == pytest.approx(math.sqrt(max(0.0, 1 - fidelity(p, q))), abs=1e-7)
    assert 0 <= fidelity(p, q) <= 1
    assert hellinger(p, q) == pytest.approx(hellinger(q, p), abs=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 16), st.integers(0, 2**31))
def test_kl_to_uniform_is_entropy_deficit(d, seed):
    p = sample_simplex(d, np.random.default_rng(seed))
    assert kl_divergence(p, uniform(d)) == pytest.approx(math.log(d) - shannon_entropy(p), abs=1e-12)


def test_triangle_inequality_of_hellinger():
    rng = np.random.default_rng(8)
    for _ in range(200):
        p, q, r = sample_simplex(5, rng, size=3)
        assert hellinger(p, r) <= hellinger(p, q) + hellinger(q, r) + 1e-12
