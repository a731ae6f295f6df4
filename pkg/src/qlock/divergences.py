"""Proximity measures between probability vectors.

Natural logarithms throughout, except :func:`min_entropy` which is in bits.
"""

from __future__ import annotations

import numpy as np

# negative weights down to this value are treated as round-off and clamped to 0
CLAMP_TOL = 1e-15
SUM_TOL = 1e-10


class InvalidDistributionError(ValueError):
    pass


def as_prob(p) -> np.ndarray:
    """Validate and return a probability vector as a float array.

    Raises
    ------
    InvalidDistributionError
        On entries below ``-1e-15``, non-finite entries, or a total mass
        further than ``1e-10`` from one.
    """
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidDistributionError(f"expected a non-empty 1-d vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidDistributionError("distribution has non-finite entries")
    if np.any(arr < -CLAMP_TOL):
        raise InvalidDistributionError(f"negative weight {arr.min():.3e}")
    arr = np.where(arr < 0, 0.0, arr)
    total = arr.sum()
    if abs(total - 1.0) > SUM_TOL:
        raise InvalidDistributionError(f"weights sum to {total!r}")
    return arr


def uniform(d: int) -> np.ndarray:
    return np.full(int(d), 1.0 / int(d))


def point_mass(i: int, d: int) -> np.ndarray:
    p = np.zeros(int(d))
    p[i] = 1.0
    return p


def _pair(p, q) -> tuple[np.ndarray, np.ndarray]:
    p, q = as_prob(p), as_prob(q)
    if p.shape != q.shape:
        raise ValueError(f"dimension mismatch: {p.size} vs {q.size}")
    return p, q


def shannon_entropy(p) -> float:
    p = as_prob(p)
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def kl_divergence(p, q) -> float:
    """``sum p log(p/q)``; ``inf`` when ``p`` is not absolutely continuous w.r.t. ``q``."""
    p, q = _pair(p, q)
    support = p > 0
    if np.any(q[support] == 0):
        return float("inf")
    val = float(np.sum(p[support] * np.log(p[support] / q[support])))
    return max(val, 0.0)


def total_variation(p, q) -> float:
    p, q = _pair(p, q)
    return float(0.5 * np.sum(np.abs(p - q)))


def fidelity(p, q) -> float:
    """Classical fidelity (Bhattacharyya coefficient) ``sum sqrt(p_i q_i)``."""
    p, q = _pair(p, q)
    return float(min(np.sum(np.sqrt(p * q)), 1.0))


def hellinger(p, q) -> float:
    """Hellinger distance ``sqrt(1 - F(p, q))``.

    Evaluated as ``||sqrt(p) - sqrt(q)||_2 / sqrt(2)``, which equals the
    fidelity form but has no cancellation when ``p`` is close to ``q``.
    """
    p, q = _pair(p, q)
    return float(min(np.linalg.norm(np.sqrt(p) - np.sqrt(q)) / np.sqrt(2.0), 1.0))


def min_entropy(p) -> float:
    """``-log2 max_i p_i`` in bits."""
    p = as_prob(p)
    return float(-np.log2(p.max()))
