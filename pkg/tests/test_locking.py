import math

import numpy as np
import pytest

from qlock.divergences import hellinger
from qlock.linalg import BipartiteDims, DimensionError, product_basis_state, trace_norm
from qlock.measurement import RankOneEffect, validate_povm
from qlock.sampling import sample_sphere
from qlock.uncertainty import FULL_SPHERE, SearchOptions, UnitaryEnsemble, haar_ensemble, identity_ensemble, worst_case_search
from qlock.locking import (
    DegenerateEnsembleError,
    DegenerateOutcomeError,
    DomainError,
    LockingScheme,
    adversary_conditionals,
    build_adversarial_povm,
    data_hiding_eval,
    encode,
    fhs_parameter_check,
    hellinger_locking_bound,
    identification_check,
    key_length_lower_bound,
    locking_accounting,
    posterior,
    posterior_coarse,
    uniform_on_subset,
    uniform_prior,
    verify_locking,
)


@pytest.fixture
def scheme():
    return LockingScheme.haar(2, 2, 2, np.random.default_rng(21))


def _joint_oracle(scheme, prior, effect_matrix):
    """P(X = x | outcome) from the full joint law of (X, K, outcome)."""
    t = scheme.t
    joint = np.array(
        [sum(prior[x] / t * np.trace(encode(scheme, x, k) @ effect_matrix).real for k in range(t)) for x in range(len(prior))]
    )
    return joint / joint.sum()


def test_encoding_is_a_density_operator(scheme):
    rho = encode(scheme, 3, 1)
    assert np.trace(rho).real == pytest.approx(1.0)
    assert np.linalg.eigvalsh(rho)[0] > -1e-14
    np.testing.assert_allclose(rho @ rho, rho / scheme.dims.d_b, atol=1e-14)


def test_identification(scheme):
    assert identification_check(scheme) < 1e-9


def test_posterior_matches_joint_oracle(scheme):
    rng = np.random.default_rng(0)
    prior = np.array([0.1, 0.2, 0.3, 0.4])
    for e in sample_sphere(scheme.dims.d, rng, size=10):
        eff = RankOneEffect(0.3, e)
        np.testing.assert_allclose(posterior(scheme, prior, eff), _joint_oracle(scheme, prior, eff.matrix()), atol=1e-10)


def test_coarse_posterior_matches_joint_oracle(scheme):
    rng = np.random.default_rng(1)
    prior = uniform_prior(2)
    effs = [RankOneEffect(w, e) for w, e in zip((0.2, 0.5, 0.1), sample_sphere(8, rng, size=3))]
    total = sum(e.matrix() for e in effs)
    np.testing.assert_allclose(posterior_coarse(scheme, prior, effs), _joint_oracle(scheme, prior, total), atol=1e-10)


def test_known_key_unlocks(scheme):
    prior = uniform_prior(2)
    for k in range(scheme.t):
        keyed = LockingScheme(UnitaryEnsemble(scheme.ensemble.unitaries[k], scheme.dims), scheme.n)
        e = scheme.ensemble.unitaries[k].conj().T @ product_basis_state(2, 1, scheme.dims)
        post = posterior(keyed, prior, RankOneEffect(1.0, e))
        np.testing.assert_allclose(post, [0, 0, 1, 0], atol=1e-12)


def test_degenerate_outcome():
    ens = identity_ensemble(BipartiteDims(2, 2), 1)
    scheme = LockingScheme(ens, 1)
    e = product_basis_state(1, 0, scheme.dims)
    with pytest.raises(DegenerateOutcomeError):
        posterior(scheme, np.array([1.0, 0.0]), RankOneEffect(1.0, e))


def test_scheme_dimension_checks(scheme):
    with pytest.raises(DimensionError):
        LockingScheme(haar_ensemble(BipartiteDims(3, 2), 1, 0), 1)
    with pytest.raises(DimensionError):
        posterior(scheme, uniform_prior(3), RankOneEffect(1.0, np.eye(8)[0]))
    with pytest.raises(IndexError):
        encode(scheme, 4, 0)


def test_locking_chain_bound():
    rng = np.random.default_rng(3)
    scheme = LockingScheme.haar(2, 4, 4, rng)
    rep = worst_case_search(scheme.ensemble, FULL_SPHERE, SearchOptions(restarts=6, max_iter=1000), rng=rng)
    ver = verify_locking(scheme, uniform_prior(2), list(sample_sphere(16, rng, size=100)) + [rep.worst_state])
    assert ver.max_hellinger <= math.sqrt(2) * rep.y + 1e-6
    assert ver.skipped == 0


def test_hellinger_locking_bound():
    assert hellinger_locking_bound(0.1, 4, 4) == 0.1
    assert hellinger_locking_bound(0.1, 3, 4) == pytest.approx(0.2 / (2**-0.5 - math.sqrt(2) * 0.1))
    with pytest.raises(DomainError):
        hellinger_locking_bound(0.5, 0, 4)


def test_key_length():
    assert key_length_lower_bound(0.1, math.inf) == pytest.approx(math.log2(50))
    assert key_length_lower_bound(0.1, 10) == pytest.approx(math.log2(1 / (0.02 + 2**-4)))
    assert key_length_lower_bound(0.1, 40) < key_length_lower_bound(0.1, math.inf)
    with pytest.raises(DomainError):
        key_length_lower_bound(1.0, 4)


def test_fhs_and_accounting():
    f = fhs_parameter_check(0.1, 900, 10**6, 1000)
    assert f["d_b_ok"] and f["t_ok"] and f["probability_bound"] == pytest.approx(1.0)
    assert not fhs_parameter_check(0.1, 10, 10, 100)["t_ok"]
    acc = locking_accounting(10, 0.25)
    assert acc["qubits_leading"] == pytest.approx(14.0) and acc["key_bits_leading"] == pytest.approx(4.0)


def test_uniform_on_subset():
    np.testing.assert_array_equal(uniform_on_subset([0, 2], 2), [0.5, 0, 0.5, 0])


def test_adversarial_povm_identifies_with_certainty():
    for seed in range(5):
        scheme = LockingScheme.haar(3, 2, 2, np.random.default_rng(seed))
        povm = build_adversarial_povm(scheme, [1, 6])
        rep = validate_povm(povm.as_list())
        assert rep.valid
        cond = adversary_conditionals(scheme, povm)
        assert set(cond) == {(x, k) for x in (1, 6) for k in range(2)}
        for v in cond.values():
            assert v == pytest.approx(1.0, abs=1e-9)


def test_adversarial_povm_domain():
    scheme = LockingScheme.haar(1, 2, 2, np.random.default_rng(0))
    with pytest.raises(DomainError):
        build_adversarial_povm(scheme, [0, 1])
    with pytest.raises(ValueError):
        build_adversarial_povm(scheme, [5])


def test_adversarial_povm_degenerate_ensemble():
    # identical keys make every encoding E(x, 0) = E(x, 1), so no direction separates them
    u = haar_ensemble(BipartiteDims(8, 2), 1, np.random.default_rng(0)).unitaries[0]
    scheme = LockingScheme(UnitaryEnsemble(np.stack([u, u]), BipartiteDims(8, 2)), 3)
    with pytest.raises(DegenerateEnsembleError):
        build_adversarial_povm(scheme, [0, 1])


def test_data_hiding_eval():
    ens = haar_ensemble(BipartiteDims(4, 4), 1, np.random.default_rng(2))
    res = data_hiding_eval(ens, uniform_prior(2), 30, np.random.default_rng(3), SearchOptions(restarts=2, max_iter=200), True)
    assert res.max_hellinger == max(res.max_sampled, res.max_searched)
    assert res.entangled_sup_y >= res.separable_sup_y - 1e-12
    with pytest.raises(ValueError):
        data_hiding_eval(haar_ensemble(BipartiteDims(4, 4), 2, 0), uniform_prior(2), 3, 0)


def test_trace_distance_of_encodings_with_same_key(scheme):
    a, b = encode(scheme, 0, 1), encode(scheme, 2, 1)
    assert 0.5 * trace_norm(a - b) == pytest.approx(1.0, abs=1e-12)
    assert hellinger(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == pytest.approx(1.0)
