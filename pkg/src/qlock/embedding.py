"""The isometry T: H -> l1^n(l2^m) induced by a unitary ensemble.

``T psi = t^{-1/2} sum_k (U_k psi) (x) |k>^C`` is viewed as an ``m x n`` matrix
with ``m = d_B`` rows and ``n = d_A t`` columns; column ``a * t + k`` holds the
B-block of ``U_k psi`` at A-index ``a``. Its mixed norm satisfies

    ||T psi||_{l1(l2)} = sqrt(d_A t) (1 - Y(psi)^2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import as_cmatrix
from .measurement import as_state
from .sampling import make_rng, sample_sphere
from .uncertainty import FULL_SPHERE, SearchOptions, UnitaryEnsemble, _y_values, eval_y, worst_case_search


def apply_t(ens: UnitaryEnsemble, psi) -> np.ndarray:
    """Matrix of ``T psi`` with shape ``(d_B, d_A t)``."""
    psi = as_state(psi, ens.dims)
    return _apply_t_unchecked(ens, psi)


def _apply_t_unchecked(ens: UnitaryEnsemble, psi: np.ndarray) -> np.ndarray:
    d_a, d_b, t = ens.dims.d_a, ens.dims.d_b, ens.t
    v = (ens.unitaries @ psi).reshape(t, d_a, d_b)  # [k, a, b]
    return np.transpose(v, (2, 1, 0)).reshape(d_b, d_a * t) / np.sqrt(t)


def apply_t_linear(ens: UnitaryEnsemble, x) -> np.ndarray:
    """``T`` applied to an arbitrary (not necessarily unit) vector."""
    return _apply_t_unchecked(ens, np.asarray(x, dtype=np.complex128))


def l1l2_norm(x) -> float:
    """Sum over columns of the column Euclidean norms."""
    return float(np.sum(np.linalg.norm(as_cmatrix(x), axis=0)))


def norm_identity_check(ens: UnitaryEnsemble, psi) -> float:
    """``| ||T psi||_{l1(l2)} - sqrt(d_A t) (1 - Y^2) |``."""
    lhs = l1l2_norm(apply_t(ens, psi))
    rhs = np.sqrt(ens.dims.d_a * ens.t) * (1.0 - eval_y(ens, psi) ** 2)
    return float(abs(lhs - rhs))


@dataclass
class DistortionReport:
    """``distortion = max_ratio / min_ratio`` over the evaluated states.

    Ratios are ``||T psi||_{l1(l2)} / scale``. The reported distortion is a
    lower bound on the distortion of T over the whole sphere.
    """

    min_ratio: float
    max_ratio: float
    distortion: float
    scale: float
    scale_kind: str
    median_norm: float
    analytic_center: float | None
    states_evaluated: int


def certify_distortion(
    ens: UnitaryEnsemble,
    n_random_states: int,
    search_opts: SearchOptions | None = None,
    rng=None,
    r_hat: float | None = None,
) -> DistortionReport:
    """Distortion of T over random states plus the extremizers of Y.

    The largest Y found gives the smallest norm and vice versa, so the search
    runs in both directions. ``scale`` is ``sqrt(d_A t) (1 - r_hat^2)`` when
    ``r_hat`` is given, else the median norm over the random states.
    """
    if ens.dims.d_b < 2:
        raise ValueError("distortion certification needs d_b >= 2")
    rng = make_rng(0 if rng is None else rng)
    search_opts = search_opts or SearchOptions(restarts=4, max_iter=500)
    states = sample_sphere(ens.dims.d, rng, size=max(n_random_states, 1)).T
    norms_random = np.sqrt(ens.dims.d_a * ens.t) * (1.0 - _y_values(ens, states) ** 2)
    hi = worst_case_search(ens, FULL_SPHERE, search_opts, rng=rng)
    lo_opts = SearchOptions(**{**search_opts.__dict__, "minimize": True})
    lo = worst_case_search(ens, FULL_SPHERE, lo_opts, rng=rng)
    extremal = [l1l2_norm(apply_t(ens, s)) for s in (hi.worst_state, lo.worst_state)]
    norms = np.concatenate([norms_random, extremal])
    median = float(np.median(norms_random))
    center = None if r_hat is None else float(np.sqrt(ens.dims.d_a * ens.t) * (1.0 - r_hat**2))
    scale, kind = (center, "analytic") if center is not None else (median, "median")
    ratios = norms / scale
    return DistortionReport(
        min_ratio=float(ratios.min()),
        max_ratio=float(ratios.max()),
        distortion=float(norms.max() / norms.min()),
        scale=scale,
        scale_kind=kind,
        median_norm=median,
        analytic_center=center,
        states_evaluated=int(norms.size),
    )


def dvoretzky_dimension(n: int, m: int, eps: float) -> dict:
    """Constant-free subspace dimension ``N min(eps, eps^2 m)`` and the ``N eps^2`` baseline."""
    if not 0.0 < eps <= 1.0:
        raise ValueError("eps must lie in (0, 1]")
    big_n = n * m
    return {"N": big_n, "dimension": big_n * min(eps, eps**2 * m), "prior_art": big_n * eps**2}
