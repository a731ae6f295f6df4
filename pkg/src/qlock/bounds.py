"""Computable ingredients of the lower bounds on ``d_B`` and ``t``.

Universal constants that the bounds carry (``C_8``, ``C_9``) are never given
numeric values here; they appear only as labels in the returned records.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .linalg import DimensionError
from .measurement import marginal_a_batch
from .sampling import make_rng, sample_simplex, sample_sphere
from .uncertainty import UnitaryEnsemble

# exact sign enumeration up to this many Rademacher variables
EXACT_SIGN_LIMIT = 20


@dataclass(frozen=True)
class SimplexMoments:
    d: int
    mean: float
    variance: float
    covariance: float


def simplex_moments(d: int) -> SimplexMoments:
    """Coordinate moments of the uniform distribution on the simplex in R^d."""
    d = int(d)
    if d < 1:
        raise ValueError("d must be positive")
    return SimplexMoments(
        d=d,
        mean=1.0 / d,
        variance=(d - 1) / (d**2 * (d + 1)),
        covariance=-1.0 / (d**2 * (d + 1)),
    )


@dataclass
class MomentEstimate:
    value: float
    std_error: float


def simplex_moments_mc(d: int, draws: int, rng) -> dict:
    """Monte Carlo mean and variance of the first coordinate and covariance of the first two.

    Standard errors of the variance and covariance are those of the sample
    means of ``(x - m)^2`` and ``(x - m)(y - m')``.
    """
    x = sample_simplex(d, make_rng(rng), size=draws)
    x0 = x[:, 0]
    out = {"mean": MomentEstimate(float(x0.mean()), float(x0.std(ddof=1) / np.sqrt(draws)))}
    sq = (x0 - x0.mean()) ** 2
    out["variance"] = MomentEstimate(float(sq.mean()), float(sq.std(ddof=1) / np.sqrt(draws)))
    if d >= 2:
        x1 = x[:, 1]
        cross = (x0 - x0.mean()) * (x1 - x1.mean())
        out["covariance"] = MomentEstimate(float(cross.mean()), float(cross.std(ddof=1) / np.sqrt(draws)))
    return out


@dataclass(frozen=True)
class TvLowerBound:
    """``value`` multiplies the unknown ``1/C_9``; so does ``simplified``."""

    value: float
    simplified: float
    constant: str = "1/C9"


def tv_lower_bound_expression(d_a: int, d_b: int) -> TvLowerBound:
    """``sqrt((d_A - 1) / (d_A d_B + 1))`` and its floor ``1 / (2 sqrt(d_B))``."""
    if d_a < 2:
        raise ValueError("requires d_a >= 2")
    return TvLowerBound(np.sqrt((d_a - 1) / (d_a * d_b + 1)), 1.0 / (2.0 * np.sqrt(d_b)))


def expected_tv_identity_mc(d_a: int, d_b: int, draws: int, rng) -> tuple[MomentEstimate, MomentEstimate]:
    """Two estimators of ``2 E D_TV(p^A_psi, Unif)`` for uniform random ``psi``.

    The first averages ``2 D_TV`` directly; the second averages
    ``d_A |sum_b X_{0,b} - 1/d_A|`` with ``X`` uniform on the simplex.
    Independent draws are used for the two.
    """
    rng = make_rng(rng)
    psi = sample_sphere(d_a * d_b, rng, size=draws)
    p = marginal_a_batch(psi, d_a)
    two_tv = np.sum(np.abs(p - 1.0 / d_a), axis=1)
    x = sample_simplex(d_a * d_b, rng, size=draws)
    block = d_a * np.abs(x[:, :d_b].sum(axis=1) - 1.0 / d_a)
    se = lambda v: float(v.std(ddof=1) / np.sqrt(draws))  # noqa: E731
    return MomentEstimate(float(two_tv.mean()), se(two_tv)), MomentEstimate(float(block.mean()), se(block))


def _block_isometry(u: np.ndarray, a: int, d_b: int) -> np.ndarray:
    """Columns ``U^dag |a, b>`` for ``b < d_B``, shape ``(d, d_B)``."""
    return u[a * d_b : (a + 1) * d_b, :].conj().T


def projector_a(ens: UnitaryEnsemble, k: int, a: int) -> np.ndarray:
    """``A_{ka} = sum_b U_k^dag |a b><a b| U_k``, a rank-``d_B`` projector."""
    if not 0 <= k < ens.t or not 0 <= a < ens.dims.d_a:
        raise IndexError(f"projector index (k={k}, a={a}) out of range")
    v = _block_isometry(ens.unitaries[k], a, ens.dims.d_b)
    return v @ v.conj().T


def hs_centered_projector_norm(d_a: int, d_b: int) -> float:
    """Squared norm ``||A - Id/d_A||_HS^2`` of a centered rank-``d_B`` projector on C^(d_A d_B)."""
    if d_a < 1 or d_b < 1:
        raise ValueError("dimensions must be positive")
    return d_b * (1.0 - 1.0 / d_a) ** 2 + (d_a * d_b - d_b) / d_a**2


def khintchine_analytic_bound(d_a: int, d_b: int, t: int) -> float:
    """``(1/(t sqrt(2d))) sqrt(sum_{k,a} ||A_ka - Id/d_A||_HS^2)``."""
    d = d_a * d_b
    return float(np.sqrt(t * d_a * hs_centered_projector_norm(d_a, d_b)) / (t * np.sqrt(2.0 * d)))


def _centered_gram(ens: UnitaryEnsemble) -> np.ndarray:
    """Real Gram matrix ``Tr(B_i B_j)`` of ``B_ka = A_ka - Id/d_A``, indexed by ``k * d_A + a``."""
    d_a, d_b = ens.dims.d_a, ens.dims.d_b
    t = ens.t
    # row (k, a, b) of V^dag is <a b| U_k
    vh = ens.unitaries.reshape(t * d_a * d_b, -1)
    overlaps = np.abs(vh @ vh.conj().T) ** 2  # |<a b|U_k U_l^dag|a' b'>|^2
    tr_aa = overlaps.reshape(t * d_a, d_b, t * d_a, d_b).sum(axis=(1, 3))
    # Tr(B_i B_j) = Tr(A_i A_j) - 2 d_B / d_A + d / d_A^2
    return tr_aa - d_b / d_a


@dataclass
class KhintchineResult:
    analytic_bound: float
    estimate: float
    std_error: float
    exact: bool
    patterns: int


def khintchine_t_bound(
    ens: UnitaryEnsemble, n_sign_samples: int = 256, rng=None, method: str = "auto"
) -> KhintchineResult:
    """Rademacher average ``E (1/(t sqrt d)) ||sum eps_ka (A_ka - Id/d_A)||_HS``.

    With ``method="auto"`` all ``2^(t d_A)`` sign patterns are enumerated when
    ``t d_A <= 20``, otherwise ``n_sign_samples`` random patterns are drawn.
    The estimate dominates ``analytic_bound`` up to Monte Carlo error.
    """
    d_a, d_b, t = ens.dims.d_a, ens.dims.d_b, ens.t
    if d_a < 2:
        raise DimensionError("requires d_a >= 2")
    if method not in ("auto", "exact", "mc"):
        raise ValueError(f"unknown method {method!r}")
    n = t * d_a
    exact = method == "exact" or (method == "auto" and n <= EXACT_SIGN_LIMIT)
    gram = _centered_gram(ens)
    scale = 1.0 / (t * np.sqrt(ens.dims.d))
    if exact:
        if n > EXACT_SIGN_LIMIT + 4:
            raise ValueError(f"exact enumeration over 2^{n} patterns refused")
        # eps and -eps give the same norm; fix the first sign
        vals = []
        for chunk in _sign_chunks(n):
            q = np.einsum("pi,ij,pj->p", chunk, gram, chunk)
            vals.append(np.sqrt(np.clip(q, 0.0, None)))
        vals = np.concatenate(vals) * scale
        estimate, se, patterns = float(vals.mean()), 0.0, 2**n
    else:
        rng = make_rng(0 if rng is None else rng)
        eps = rng.choice([-1.0, 1.0], size=(n_sign_samples, n))
        q = np.einsum("pi,ij,pj->p", eps, gram, eps)
        vals = np.sqrt(np.clip(q, 0.0, None)) * scale
        estimate = float(vals.mean())
        se = float(vals.std(ddof=1) / np.sqrt(n_sign_samples)) if n_sign_samples > 1 else 0.0
        patterns = n_sign_samples
    return KhintchineResult(khintchine_analytic_bound(d_a, d_b, t), estimate, se, exact, patterns)


def _sign_chunks(n: int, chunk: int = 1 << 14):
    """All sign vectors in {-1, 1}^n with first entry +1, in chunks."""
    rest = itertools.product((1.0, -1.0), repeat=n - 1)
    while True:
        block = list(itertools.islice(rest, chunk))
        if not block:
            return
        arr = np.asarray(block, dtype=np.float64).reshape(len(block), n - 1)
        yield np.hstack([np.ones((len(block), 1)), arr])


def required_parameters(eps: float) -> dict:
    """Orders of magnitude of ``d_B`` and ``t`` forced by an ``eps`` metric uncertainty relation.

    ``t_min`` is the constant-pinned ``1/(32 eps^2)``; ``d_b_min_coefficient``
    must be divided by ``C9^2``.
    """
    if not 0.0 < eps < 1.0 + 1e-12:
        raise ValueError("eps must lie in (0, 1]")
    return {
        "d_b_min_order": 1.0 / eps**2,
        "t_min_order": 1.0 / eps**2,
        "t_min": 1.0 / (32.0 * eps**2),
        "d_b_min_coefficient": 1.0 / (16.0 * eps**2),
        "d_b_min_constant": "1/C9^2",
    }
