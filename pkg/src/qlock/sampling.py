"""Seeded random sources: Haar unitaries, sphere and simplex points, Gaussian vectors.

Every sampler takes a ``numpy.random.Generator``. Generators are built from a
:class:`Seed`; independent per-trial substreams come from :func:`substream`, so
results do not depend on how trials are scheduled across workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Seed:
    value: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("value", "stream_id"):
            v = int(getattr(self, name))
            if not 0 <= v < 2**64:
                raise ValueError(f"{name} must be a 64-bit unsigned integer, got {v}")

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.value, spawn_key=(self.stream_id,))))


def make_rng(seed) -> np.random.Generator:
    """Accept a Seed, an int, or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, Seed):
        return seed.generator()
    return Seed(int(seed)).generator()


def substream(seed: Seed, index: int) -> np.random.Generator:
    """Generator for trial ``index``, a pure function of ``(seed, index)``."""
    ss = np.random.SeedSequence(seed.value, spawn_key=(seed.stream_id, int(index)))
    return np.random.Generator(np.random.PCG64(ss))


def _check_dim(d: int) -> int:
    d = int(d)
    if d < 1:
        raise ValueError(f"dimension must be at least 1, got {d}")
    return d


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Complex normals with ``E|z|^2 = 1``: ``(xi + i*eta) / sqrt(2)``."""
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return z / np.sqrt(2.0)


def sample_haar_qr(d: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Haar unitary from the QR decomposition of a complex Ginibre matrix.

    Column ``j`` of ``Q`` is multiplied by ``R_jj / |R_jj|``; without that
    phase correction the result is not Haar distributed.

    Parameters
    ----------
    d : int
        Matrix dimension.
    rng : numpy.random.Generator
    size : int, optional
        If given, return a stack of shape ``(size, d, d)``.
    """
    d = _check_dim(d)
    shape = (d, d) if size is None else (int(size), d, d)
    z = complex_normal(rng, shape)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    phases = diag / np.abs(diag)
    return q * phases[..., None, :]


def _unitary_with_first_column(v: np.ndarray) -> np.ndarray:
    """Batch of unitaries whose first column is the given unit vector.

    Uses a Householder reflection mapping ``phi * e_1`` to ``v`` where
    ``phi = v_0 / |v_0|``, followed by ``diag(phi, 1, ..., 1)``.
    """
    n, d = v.shape
    v0 = v[:, 0]
    absv0 = np.abs(v0)
    phi = np.where(absv0 > 0, v0 / np.where(absv0 > 0, absv0, 1.0), 1.0)
    u = -v.copy()
    u[:, 0] += phi
    unorm2 = np.sum(np.abs(u) ** 2, axis=1)
    eye = np.broadcast_to(np.eye(d, dtype=np.complex128), (n, d, d))
    safe = np.where(unorm2 > 1e-300, unorm2, 1.0)
    refl = eye - 2.0 * u[:, :, None] * u.conj()[:, None, :] / safe[:, None, None]
    refl = np.where((unorm2 > 1e-300)[:, None, None], refl, eye)
    m = refl.copy()
    m[:, :, 0] *= phi[:, None]
    return m


def sample_haar_recursive(d: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Haar unitary built recursively as ``M @ diag(1, V)``.

    ``M`` is any unitary whose first column is uniform on the complex sphere
    and ``V`` is Haar on ``U(d-1)``, drawn independently by the same recursion.
    Independent of :func:`sample_haar_qr`; kept as a cross-check.
    """
    d = _check_dim(d)
    n = 1 if size is None else int(size)
    out = _haar_recursive_batch(d, rng, n)
    return out[0] if size is None else out


def _haar_recursive_batch(d: int, rng: np.random.Generator, n: int) -> np.ndarray:
    first = complex_normal(rng, (n, d))
    first /= np.linalg.norm(first, axis=1, keepdims=True)
    if d == 1:
        return first[:, :, None]
    m = _unitary_with_first_column(first)
    w = np.zeros((n, d, d), dtype=np.complex128)
    w[:, 0, 0] = 1.0
    w[:, 1:, 1:] = _haar_recursive_batch(d - 1, rng, n)
    return m @ w


def sample_sphere(d: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Uniform point(s) on the unit sphere of C^d."""
    d = _check_dim(d)
    shape = (d,) if size is None else (int(size), d)
    z = complex_normal(rng, shape)
    return z / np.linalg.norm(z, axis=-1, keepdims=True)


def sample_simplex(d: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Uniform point(s) on the probability simplex, as squared moduli of a sphere point."""
    x = np.abs(sample_sphere(d, rng, size)) ** 2
    return x / np.sum(x, axis=-1, keepdims=True)


def sample_gaussian_state(d: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Standard Gaussian vector in C^d, normalized so that ``E||G||^2 = d``.

    For a fixed unit vector ``psi``, ``Re <G|psi>`` is N(0, 1/2) under this
    normalization; ``sqrt(2) * Re <G|psi>`` is standard normal.
    """
    d = _check_dim(d)
    shape = (d,) if size is None else (int(size), d)
    return complex_normal(rng, shape)
