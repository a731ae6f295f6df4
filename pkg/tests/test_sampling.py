import numpy as np
import pytest
from scipy import stats

from qlock.sampling import (
    Seed,
    complex_normal,
    make_rng,
    sample_gaussian_state,
    sample_haar_qr,
    sample_haar_recursive,
    sample_simplex,
    sample_sphere,
    substream,
)


@pytest.mark.parametrize("sampler", [sample_haar_qr, sample_haar_recursive])
@pytest.mark.parametrize("d", [1, 2, 5, 9])
def test_samplers_return_unitaries(sampler, d):
    u = sampler(d, np.random.default_rng(d), size=4)
    assert u.shape == (4, d, d)
    eye = np.eye(d)
    for m in u:
        np.testing.assert_allclose(m.conj().T @ m, eye, atol=1e-12)


@pytest.mark.parametrize("sampler", [sample_haar_qr, sample_haar_recursive])
def test_first_entry_is_beta(sampler):
    d = 4
    u = sampler(d, np.random.default_rng(7), size=4000)
    x = np.abs(u[:, 0, 0]) ** 2
    assert stats.kstest(x, stats.beta(1, d - 1).cdf).pvalue > 1e-3


@pytest.mark.parametrize("sampler", [sample_haar_qr, sample_haar_recursive])
def test_phase_of_diagonal_is_uniform(sampler):
    # without the phase correction the diagonal of R would bias arg U_00
    u = sampler(3, np.random.default_rng(11), size=4000)
    phases = (np.angle(u[:, 0, 0]) + np.pi) / (2 * np.pi)
    assert stats.kstest(phases, "uniform").pvalue > 1e-3


def test_left_invariance_of_haar():
    rng = np.random.default_rng(5)
    v = sample_haar_qr(3, rng)
    u = sample_haar_qr(3, rng, size=4000)
    x = np.abs((v @ u)[:, 1, 2]) ** 2
    assert stats.kstest(x, stats.beta(1, 2).cdf).pvalue > 1e-3


def test_sphere_and_simplex():
    rng = np.random.default_rng(0)
    s = sample_sphere(6, rng, size=100)
    np.testing.assert_allclose(np.linalg.norm(s, axis=1), 1.0, atol=1e-14)
    x = sample_simplex(6, rng, size=100)
    assert np.all(x >= 0)
    np.testing.assert_allclose(x.sum(axis=1), 1.0, atol=1e-14)


def test_complex_normal_second_moment():
    z = complex_normal(np.random.default_rng(2), (200000,))
    assert np.mean(np.abs(z) ** 2) == pytest.approx(1.0, abs=0.01)


def test_gaussian_state_projection_is_standard_after_scaling():
    rng = np.random.default_rng(4)
    psi = sample_sphere(5, rng)
    g = sample_gaussian_state(5, rng, size=20000)
    proj = np.sqrt(2.0) * np.real(g.conj() @ psi)
    assert stats.kstest(proj, "norm").pvalue > 1e-3


def test_seed_streams_are_reproducible_and_distinct():
    a = Seed(42).generator().standard_normal(3)
    b = Seed(42).generator().standard_normal(3)
    c = Seed(42, stream_id=1).generator().standard_normal(3)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    s0 = substream(Seed(42), 0).standard_normal(3)
    s1 = substream(Seed(42), 1).standard_normal(3)
    assert not np.array_equal(s0, s1)
    np.testing.assert_array_equal(s0, substream(Seed(42), 0).standard_normal(3))


def test_make_rng_passthrough():
    g = np.random.default_rng(1)
    assert make_rng(g) is g
    np.testing.assert_array_equal(make_rng(9).random(2), make_rng(Seed(9)).random(2))


def test_bad_dimension():
    with pytest.raises(ValueError):
        sample_sphere(0, np.random.default_rng(0))
