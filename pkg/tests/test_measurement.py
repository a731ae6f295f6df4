import numpy as np
import pytest

from qlock.linalg import BipartiteDims, DimensionError, partial_trace_b, product_basis_state
from qlock.measurement import (
    InvalidPovmError,
    RankOneEffect,
    as_state,
    born_probabilities,
    marginal_a,
    marginal_a_batch,
    validate_povm,
)
from qlock.sampling import sample_haar_qr, sample_sphere


def test_marginal_matches_partial_trace_diagonal():
    dims = BipartiteDims(3, 4)
    psi = sample_sphere(dims.d, np.random.default_rng(0))
    rho_a = partial_trace_b(np.outer(psi, psi.conj()), dims)
    np.testing.assert_allclose(marginal_a(psi, dims), np.diag(rho_a).real, atol=1e-14)


def test_marginal_of_product_basis_state_is_point_mass():
    dims = BipartiteDims(3, 2)
    np.testing.assert_array_equal(marginal_a(product_basis_state(1, 1, dims), dims), [0.0, 1.0, 0.0])


def test_marginal_batch_shape():
    v = sample_sphere(12, np.random.default_rng(1), size=(5))
    assert marginal_a_batch(v, 4).shape == (5, 4)


def test_state_validation():
    dims = BipartiteDims(2, 2)
    with pytest.raises(DimensionError):
        as_state(np.ones(3), dims)
    with pytest.raises(ValueError):
        as_state(np.ones(4), dims)


def test_rank_one_effect():
    e = RankOneEffect(0.5, np.array([1.0, 0.0]))
    np.testing.assert_array_equal(e.matrix(), [[0.5, 0], [0, 0]])
    with pytest.raises(ValueError):
        RankOneEffect(1.5, np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        RankOneEffect(0.5, np.array([1.0, 1.0]))


def test_basis_povm_from_unitary_is_valid_and_born_rule():
    rng = np.random.default_rng(2)
    u = sample_haar_qr(4, rng)
    effects = [np.outer(u[:, i], u[:, i].conj()) for i in range(4)]
    rep = validate_povm(effects)
    assert rep.valid
    psi = sample_sphere(4, rng)
    p = born_probabilities(effects, np.outer(psi, psi.conj()))
    np.testing.assert_allclose(p, np.abs(u.conj().T @ psi) ** 2, atol=1e-14)


def test_invalid_povm_detected():
    rep = validate_povm([np.diag([1.0, 0.0]), np.diag([0.5, 0.0])])
    assert not rep.valid
    rep = validate_povm([np.diag([1.5, 1.0]), np.diag([-0.5, 0.0])])
    assert rep.min_eigenvalue < 0 and not rep.valid
    with pytest.raises(InvalidPovmError):
        born_probabilities([np.diag([1.0, 0.0])], np.eye(2) / 2)
    with pytest.raises(InvalidPovmError):
        validate_povm([])
