import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qlock.linalg import (
    BipartiteDims,
    DimensionError,
    NoNullspaceError,
    basis_state,
    hs_norm,
    is_unitary,
    nullspace_vector,
    operator_norm,
    partial_trace_b,
    product_basis_state,
    tensor,
    trace_norm,
)
from qlock.sampling import sample_haar_qr, sample_sphere


def test_dims_validation():
    assert BipartiteDims(3, 5).d == 15
    with pytest.raises(DimensionError):
        BipartiteDims(0, 2)


def test_product_basis_state_index_is_a_major():
    dims = BipartiteDims(3, 4)
    v = product_basis_state(2, 1, dims)
    assert np.argmax(np.abs(v)) == 2 * 4 + 1
    np.testing.assert_array_equal(v, tensor(basis_state(2, 3), basis_state(1, 4)))


def test_partial_trace_of_product():
    rng = np.random.default_rng(0)
    a = sample_sphere(3, rng)
    b = sample_sphere(2, rng)
    rho = np.outer(np.kron(a, b), np.kron(a, b).conj())
    np.testing.assert_allclose(partial_trace_b(rho, BipartiteDims(3, 2)), np.outer(a, a.conj()), atol=1e-14)


def test_partial_trace_of_maximally_entangled_is_mixed():
    d = 3
    psi = sum(np.kron(basis_state(i, d), basis_state(i, d)) for i in range(d)) / np.sqrt(d)
    out = partial_trace_b(np.outer(psi, psi.conj()), BipartiteDims(d, d))
    np.testing.assert_allclose(out, np.eye(d) / d, atol=1e-15)


def test_norms_on_diagonal():
    m = np.diag([3.0, -4.0, 0.0])
    assert trace_norm(m) == pytest.approx(7.0)
    assert hs_norm(m) == pytest.approx(5.0)
    assert operator_norm(m) == pytest.approx(4.0)


def test_trace_norm_requires_square():
    with pytest.raises(DimensionError):
        trace_norm(np.ones((2, 3)))


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 12), st.integers(1, 5), st.integers(0, 2**31))
def test_nullspace_vector_is_orthogonal(d, k, seed):
    k = min(k, d - 1)
    rng = np.random.default_rng(seed)
    cols = list(sample_sphere(d, rng, size=k))
    e = nullspace_vector(cols, d)
    assert np.linalg.norm(e) == pytest.approx(1.0)
    for c in cols:
        assert abs(np.vdot(c, e)) < 1e-10


def test_nullspace_vector_empty_and_full():
    np.testing.assert_array_equal(nullspace_vector([], 3), basis_state(0, 3))
    with pytest.raises(NoNullspaceError):
        nullspace_vector(list(np.eye(3, dtype=complex)), 3)


def test_nullspace_vector_is_deterministic():
    rng = np.random.default_rng(3)
    cols = list(sample_sphere(5, rng, size=2))
    np.testing.assert_array_equal(nullspace_vector(cols, 5), nullspace_vector(cols, 5))


def test_is_unitary():
    u = sample_haar_qr(5, np.random.default_rng(1))
    assert is_unitary(u)
    assert not is_unitary(2 * u)
    assert not is_unitary(np.ones((2, 3)))
