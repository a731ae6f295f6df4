"""Uncertainty functionals over unitary ensembles.

For an ensemble ``U_1, ..., U_t`` acting on H = H_A (x) H_B and a unit vector
``psi`` the central quantity is

    Y(psi) = sqrt( (1/t) sum_k D_H(p^A_{U_k psi}, Unif[d_A])^2 ),

the quadratic mean of Hellinger distances between the A-marginals of the
rotated state and the uniform distribution. Its supremum over a set of states
is estimated from below by multi-start projected gradient ascent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import BipartiteDims, DimensionError, as_cvector, hs_norm
from .measurement import as_state, marginal_a_batch
from .parallel import map_trials
from .sampling import Seed, complex_normal, make_rng, sample_haar_qr, sample_sphere, substream

UNITARY_TOL = 1e-9
# regularizer for the derivative of sqrt(p) at p = 0
SQRT_REG = 1e-12


@dataclass(frozen=True)
class UnitaryEnsemble:
    """``t`` unitaries on H stored as one array of shape ``(t, d, d)``."""

    unitaries: np.ndarray
    dims: BipartiteDims

    def __post_init__(self):
        u = np.asarray(self.unitaries, dtype=np.complex128)
        if u.ndim == 2:
            u = u[None]
        if u.ndim != 3 or u.shape[1:] != (self.dims.d, self.dims.d) or u.shape[0] < 1:
            raise DimensionError(f"unitaries of shape {u.shape} do not match d={self.dims.d}")
        object.__setattr__(self, "unitaries", u)

    @property
    def t(self) -> int:
        return self.unitaries.shape[0]

    def check_unitary(self, tol: float = UNITARY_TOL) -> float:
        """Largest ``||U^dag U - Id||_HS`` over members; raises above ``tol``."""
        eye = np.eye(self.dims.d)
        worst = max(hs_norm(u.conj().T @ u - eye) for u in self.unitaries)
        if worst > tol:
            raise ValueError(f"ensemble member is not unitary (residual {worst:.3e})")
        return worst

    def apply(self, states: np.ndarray) -> np.ndarray:
        """``U_k @ states`` for a ``(d, R)`` array, returned with shape ``(t, d, R)``."""
        t, d, _ = self.unitaries.shape
        return (self.unitaries.reshape(t * d, d) @ states).reshape(t, d, -1)

    def apply_adjoint_sum(self, w: np.ndarray) -> np.ndarray:
        """``sum_k U_k^dag @ w[k]`` for ``w`` of shape ``(t, d, R)``."""
        t, d, _ = self.unitaries.shape
        flat = self.unitaries.reshape(t * d, d)
        return (flat.T @ w.reshape(t * d, -1).conj()).conj()


def haar_ensemble(dims: BipartiteDims, t: int, rng) -> UnitaryEnsemble:
    rng = make_rng(rng)
    return UnitaryEnsemble(sample_haar_qr(dims.d, rng, size=t), dims)


def identity_ensemble(dims: BipartiteDims, t: int = 1) -> UnitaryEnsemble:
    return UnitaryEnsemble(np.broadcast_to(np.eye(dims.d, dtype=np.complex128), (t, dims.d, dims.d)).copy(), dims)


# ---------------------------------------------------------------------------
# functionals


def _marginals(ens: UnitaryEnsemble, states: np.ndarray) -> np.ndarray:
    """A-marginals of ``U_k psi_r``, shape ``(t, d_a, R)``."""
    v = ens.apply(states)
    return marginal_a_batch(np.moveaxis(v, 1, 2), ens.dims.d_a).transpose(0, 2, 1)


def _state_columns(ens: UnitaryEnsemble, psi) -> np.ndarray:
    return as_state(psi, ens.dims)[:, None]


def _hellinger_sq_to_uniform(p: np.ndarray, d_a: int) -> np.ndarray:
    """``D_H(p, Unif)^2`` along axis 1 of ``(t, d_a, R)`` marginals."""
    return 0.5 * np.sum((np.sqrt(np.clip(p, 0.0, None)) - 1.0 / np.sqrt(d_a)) ** 2, axis=1)


def _y_values(ens: UnitaryEnsemble, states: np.ndarray) -> np.ndarray:
    p = _marginals(ens, states)
    return np.sqrt(np.mean(_hellinger_sq_to_uniform(p, ens.dims.d_a), axis=0))


def eval_y(ens: UnitaryEnsemble, psi) -> float:
    """Quadratic mean over the ensemble of ``D_H(p^A_{U_k psi}, Unif[d_A])``."""
    return float(min(_y_values(ens, _state_columns(ens, psi))[0], 1.0))


def eval_fidelity_uncertainty(ens: UnitaryEnsemble, psi) -> float:
    """Mean fidelity ``(1/t) sum_k F(p^A_{U_k psi}, Unif[d_A])``."""
    p = _marginals(ens, _state_columns(ens, psi))
    f = np.sum(np.sqrt(np.clip(p, 0.0, None) / ens.dims.d_a), axis=1)
    return float(np.mean(f))


def eval_metric_uncertainty(ens: UnitaryEnsemble, psi) -> float:
    """Mean total variation distance of the marginals to uniform."""
    p = _marginals(ens, _state_columns(ens, psi))
    tv = 0.5 * np.sum(np.abs(p - 1.0 / ens.dims.d_a), axis=1)
    return float(np.mean(tv))


def eval_entropic_uncertainty(ens: UnitaryEnsemble, psi) -> float:
    """Mean Shannon entropy (nats) of the marginals."""
    p = _marginals(ens, _state_columns(ens, psi))
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, -p * np.log(np.where(p > 0, p, 1.0)), 0.0)
    return float(np.mean(np.sum(terms, axis=1)))


def entropic_comparison_value(t: int, d: int, constant: float = 0.0) -> float:
    """``(1 - 1/t) log d - C``; ``C`` is a universal constant left to the caller."""
    return (1.0 - 1.0 / t) * np.log(d) - constant


# ---------------------------------------------------------------------------
# objectives for the sphere search: value and ascent direction d/d(psi*)


def _hellinger_objective(ens: UnitaryEnsemble, states: np.ndarray):
    """``Y^2 = 1 - mean fidelity`` and its conjugate gradient."""
    d_a = ens.dims.d_a
    t = ens.t
    v = ens.apply(states)  # (t, d, R)
    r = v.shape[-1]
    v4 = v.reshape(t, d_a, -1, r)
    p = np.sum(v4.real**2 + v4.imag**2, axis=2)  # (t, d_a, R)
    value = np.mean(_hellinger_sq_to_uniform(p, d_a), axis=0)
    w = v4 / (2.0 * np.sqrt(p + SQRT_REG))[:, :, None, :]
    grad = -ens.apply_adjoint_sum(w.reshape(t, -1, r)) / (t * np.sqrt(d_a))
    return value, grad


def _tv_objective(ens: UnitaryEnsemble, states: np.ndarray):
    """Mean TV distance to uniform and a subgradient (ties broken toward +)."""
    d_a = ens.dims.d_a
    t = ens.t
    v = ens.apply(states)
    r = v.shape[-1]
    v4 = v.reshape(t, d_a, -1, r)
    p = np.sum(v4.real**2 + v4.imag**2, axis=2)
    diff = p - 1.0 / d_a
    value = np.mean(0.5 * np.sum(np.abs(diff), axis=1), axis=0)
    sign = np.where(diff >= 0, 1.0, -1.0)
    w = 0.5 * v4 * sign[:, :, None, :]
    grad = ens.apply_adjoint_sum(w.reshape(t, -1, r)) / t
    return value, grad


OBJECTIVES = {"hellinger": _hellinger_objective, "tv": _tv_objective}


# ---------------------------------------------------------------------------
# search


@dataclass(frozen=True)
class StateSubset:
    """Where the search runs: ``full_sphere``, ``separable`` or an explicit list."""

    kind: str = "full_sphere"
    states: tuple = ()

    def __post_init__(self):
        if self.kind not in ("full_sphere", "separable", "explicit_list"):
            raise ValueError(f"unknown subset kind {self.kind!r}")
        if self.kind == "explicit_list" and len(self.states) == 0:
            raise ValueError("explicit_list needs at least one state")

    @classmethod
    def explicit(cls, states) -> "StateSubset":
        return cls("explicit_list", tuple(as_cvector(s) for s in states))


FULL_SPHERE = StateSubset("full_sphere")
SEPARABLE = StateSubset("separable")


@dataclass
class SearchOptions:
    objective: str = "hellinger"
    restarts: int = 20
    max_iter: int = 5000
    grad_tol: float = 1e-8
    initial_step: float = 0.5
    minimize: bool = False
    # a restart also stops when its value rises by less than value_tol over window iterations
    value_tol: float = 1e-9
    window: int = 50
    # extra full-sphere starts U_k^dag |0, 0> for the first ``aligned_starts`` keys
    aligned_starts: int = 0


@dataclass
class UncertaintyReport:
    """Outcome of a worst-case search.

    ``y`` is Y at the best state found. For the Hellinger objective
    ``epsilon_fidelity = y**2`` is ``1 -`` the smallest mean fidelity found;
    ``epsilon_metric`` is the mean TV distance and ``epsilon_entropic`` the
    mean KL divergence to uniform (``log d_A`` minus mean entropy), both at
    that state. All values are lower bounds on the corresponding suprema.
    """

    y: float
    epsilon_fidelity: float
    epsilon_metric: float
    epsilon_entropic: float
    objective_value: float
    worst_state: np.ndarray
    restarts: int
    iterations: int
    converged: bool
    restart_values: list = field(default_factory=list)


def _normalize_columns(x: np.ndarray) -> np.ndarray:
    return x / np.linalg.norm(x, axis=0, keepdims=True)


def _tangent(x: np.ndarray, g: np.ndarray) -> np.ndarray:
    return g - np.real(np.sum(x.conj() * g, axis=0, keepdims=True)) * x


def _kron_columns(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.einsum("ir,jr->ijr", a, b).reshape(a.shape[0] * b.shape[0], -1)


def _factor_gradients(grad: np.ndarray, factors: list, d_a: int) -> list:
    if len(factors) == 1:
        return [grad]
    a, b = factors
    g = grad.reshape(d_a, -1, grad.shape[-1])
    return [np.einsum("ijr,jr->ir", g, b.conj()), np.einsum("ijr,ir->jr", g, a.conj())]


def _ascent(fn, factors: list, d_a: int, opts: SearchOptions):
    """Projected gradient ascent on a product of unit spheres, one column per restart.

    Factors are updated cyclically. Each column keeps its own step, grown by
    1.5 on improvement and halved otherwise; a column stops once its
    tangent gradient is below ``grad_tol``, its step underflows, or its value
    plateaus over ``opts.window`` iterations.
    """
    sign = -1.0 if opts.minimize else 1.0

    def evaluate(fs):
        psi = fs[0] if len(fs) == 1 else _kron_columns(*fs)
        val, grad = fn(psi)
        return sign * val, sign * grad

    factors = [_normalize_columns(f) for f in factors]
    r = factors[0].shape[1]
    nf = len(factors)
    value, grad = evaluate(factors)
    steps = np.full((nf, r), float(opts.initial_step))
    active = np.ones(r, dtype=bool)
    grad_ok = np.zeros(r, dtype=bool)
    stalled = np.zeros((nf, r), dtype=bool)
    plateau = np.zeros(r, dtype=bool)
    snapshot = value.copy()
    iterations = 0
    for it in range(opts.max_iter):
        if it > 0 and it % opts.window == 0:
            plateau |= active & (value - snapshot < opts.value_tol)
            active &= ~plateau
            snapshot = value.copy()
        if not active.any():
            break
        iterations = it + 1
        j = it % nf
        fgrads = _factor_gradients(grad, factors, d_a)
        tangents = [_tangent(f, g) for f, g in zip(factors, fgrads)]
        tnorm = np.sqrt(sum(np.sum(np.abs(tg) ** 2, axis=0) for tg in tangents))
        grad_ok |= active & (tnorm < opts.grad_tol)
        active &= ~grad_ok
        if not active.any():
            break
        cand = list(factors)
        cand[j] = np.where(active, _normalize_columns(factors[j] + steps[j] * tangents[j]), factors[j])
        cval, cgrad = evaluate(cand)
        better = active & (cval > value)
        factors[j] = np.where(better, cand[j], factors[j])
        value = np.where(better, cval, value)
        grad = np.where(better, cgrad, grad)
        steps[j] = np.where(better, np.minimum(steps[j] * 1.5, 10.0), steps[j] * 0.5)
        stalled[j] = steps[j] < 1e-14
        active &= ~stalled.all(axis=0)
    psi = factors[0] if nf == 1 else _kron_columns(*factors)
    converged = grad_ok | stalled.all(axis=0) | plateau
    return sign * value, psi, iterations, converged


def _report(ens: UnitaryEnsemble, psi: np.ndarray, objective_value: float, **diag) -> UncertaintyReport:
    y = eval_y(ens, psi)
    return UncertaintyReport(
        y=y,
        epsilon_fidelity=1.0 - eval_fidelity_uncertainty(ens, psi),
        epsilon_metric=eval_metric_uncertainty(ens, psi),
        epsilon_entropic=max(np.log(ens.dims.d_a) - eval_entropic_uncertainty(ens, psi), 0.0),
        objective_value=float(objective_value),
        worst_state=psi,
        **diag,
    )


def _objective_on_states(ens: UnitaryEnsemble, states: np.ndarray, objective: str) -> np.ndarray:
    if objective == "hellinger":
        return _y_values(ens, states)
    return OBJECTIVES[objective](ens, states)[0]


def key_aligned_states(ens: UnitaryEnsemble, count: int) -> np.ndarray:
    """Columns ``U_k^dag |0, 0>`` for ``k < count``.

    The k-th marginal of such a state is a point mass, so each column has
    ``Y^2 >= (1 - 1/sqrt(d_A)) / t``.
    """
    return ens.unitaries[:count, 0, :].conj().T


def worst_case_search(
    ens: UnitaryEnsemble,
    subset: StateSubset = FULL_SPHERE,
    opts: SearchOptions | None = None,
    rng=None,
    initial_states=None,
) -> UncertaintyReport:
    """Search for the state maximizing Y (or mean TV) over ``subset``.

    Runs ``opts.restarts`` random starts plus any ``initial_states``; for the
    separable subset initial states are given as ``(psi_a, psi_b)`` pairs.
    The returned value is attained by the returned state, hence a certified
    lower bound on the supremum (an upper bound on the infimum when
    ``opts.minimize``). Non-convergence is reported, never raised.
    """
    opts = opts or SearchOptions()
    if opts.objective not in OBJECTIVES:
        raise ValueError(f"unknown objective {opts.objective!r}")
    dims = ens.dims

    if subset.kind == "explicit_list":
        states = np.stack([as_state(s, dims) for s in subset.states], axis=1)
        vals = _objective_on_states(ens, states, opts.objective)
        best = int(np.argmin(vals) if opts.minimize else np.argmax(vals))
        return _report(
            ens, states[:, best], vals[best], restarts=len(subset.states), iterations=0, converged=True,
            restart_values=[float(v) for v in vals],
        )

    rng = make_rng(0 if rng is None else rng)
    objective_fn = OBJECTIVES[opts.objective]

    def fn(psi):
        return objective_fn(ens, psi)

    if subset.kind == "full_sphere":
        starts = [sample_sphere(dims.d, rng, size=opts.restarts).T] if opts.restarts else []
        if initial_states is not None:
            starts.append(np.stack([as_cvector(s) for s in initial_states], axis=1))
        if opts.aligned_starts:
            starts.append(key_aligned_states(ens, min(opts.aligned_starts, ens.t)))
        factors = [np.concatenate(starts, axis=1)]
    else:
        a0 = [sample_sphere(dims.d_a, rng, size=opts.restarts).T] if opts.restarts else []
        b0 = [sample_sphere(dims.d_b, rng, size=opts.restarts).T] if opts.restarts else []
        if initial_states is not None:
            a0.append(np.stack([as_cvector(a) for a, _ in initial_states], axis=1))
            b0.append(np.stack([as_cvector(b) for _, b in initial_states], axis=1))
        factors = [np.concatenate(a0, axis=1), np.concatenate(b0, axis=1)]
    if factors[0].shape[1] == 0:
        raise ValueError("search needs at least one restart or initial state")

    values, psi, iterations, converged = _ascent(fn, factors, dims.d_a, opts)
    # recompute exactly at the final states so the reported value is attained
    exact = _objective_on_states(ens, _normalize_columns(psi), opts.objective)
    best = int(np.argmin(exact) if opts.minimize else np.argmax(exact))
    return _report(
        ens, _normalize_columns(psi)[:, best], exact[best], restarts=psi.shape[1], iterations=iterations,
        converged=bool(converged[best]), restart_values=[float(v) for v in exact],
    )


# ---------------------------------------------------------------------------
# Monte Carlo estimates


@dataclass
class REstimate:
    mean: float
    std_error: float
    fidelity_mean: float
    fidelity_std_error: float
    trials: int


def _as_seed(seed) -> Seed:
    return seed if isinstance(seed, Seed) else Seed(int(seed))


def estimate_r(
    dims: BipartiteDims,
    t: int,
    trials: int,
    seed,
    state=None,
    sampler: str = "haar",
    threads: int | None = None,
) -> REstimate:
    """Monte Carlo estimate of ``R = E Y(psi)`` over fresh Haar ensembles.

    ``state`` defaults to the first canonical basis vector. With
    ``sampler="sphere"`` each ``U_k psi`` is drawn directly as a uniform
    sphere point, which has the same law as the image of a fixed unit
    vector under a Haar unitary and avoids building ``d x d`` matrices.
    """
    if trials < 2:
        raise ValueError("need at least two trials for a standard error")
    if sampler not in ("haar", "sphere"):
        raise ValueError(f"unknown sampler {sampler!r}")
    seed = _as_seed(seed)
    psi = np.zeros(dims.d, dtype=np.complex128)
    psi[0] = 1.0
    if state is not None:
        psi = as_state(state, dims)

    def one(i):
        rng = substream(seed, i)
        if sampler == "haar":
            v = sample_haar_qr(dims.d, rng, size=t) @ psi
        else:
            v = sample_sphere(dims.d, rng, size=t)
        p = marginal_a_batch(v, dims.d_a)  # (t, d_a)
        h2 = 0.5 * np.sum((np.sqrt(p) - 1.0 / np.sqrt(dims.d_a)) ** 2, axis=1)
        f = np.sum(np.sqrt(p / dims.d_a), axis=1)
        return np.sqrt(np.mean(h2)), np.mean(f)

    out = np.array(map_trials(one, trials, threads))
    ys, fs = out[:, 0], out[:, 1]
    return REstimate(
        mean=float(ys.mean()),
        std_error=float(ys.std(ddof=1) / np.sqrt(trials)),
        fidelity_mean=float(fs.mean()),
        fidelity_std_error=float(fs.std(ddof=1) / np.sqrt(trials)),
        trials=trials,
    )


def separable_width_exact(g, dims: BipartiteDims) -> float:
    """``sup Re <G|psi_A (x) psi_B>`` over unit product vectors.

    Equals the largest singular value of the ``d_A x d_B`` reshaping of G.
    """
    g = as_cvector(g)
    if g.size != dims.d:
        raise DimensionError(f"Gaussian vector has dimension {g.size}, expected {dims.d}")
    return float(np.linalg.svd(g.reshape(dims.d_a, dims.d_b), compute_uv=False)[0])


def separable_width_mc(dims: BipartiteDims, draws: int, seed) -> tuple[float, float]:
    """Monte Carlo mean and standard error of the separable Gaussian width."""
    rng = make_rng(seed)
    g = complex_normal(rng, (draws, dims.d_a, dims.d_b))
    s = np.linalg.svd(g, compute_uv=False)[:, 0]
    return float(s.mean()), float(s.std(ddof=1) / np.sqrt(draws))


def lipschitz_check(ens1: UnitaryEnsemble, ens2: UnitaryEnsemble, states) -> float:
    """Ratio of ``|f(ens1) - f(ens2)|`` to the l2 sum of Hilbert-Schmidt distances.

    ``f`` is the maximum of Y over ``states`` (a ``(d, n)`` array or a list
    of vectors). The ratio never exceeds ``1/sqrt(2t)``.
    """
    if ens1.dims != ens2.dims or ens1.t != ens2.t:
        raise DimensionError("ensembles must share dimensions and size")
    states = np.asarray(states, dtype=np.complex128)
    if states.ndim == 2 and states.shape[0] != ens1.dims.d:
        states = states.T
    states = _normalize_columns(states.reshape(ens1.dims.d, -1))
    f1 = _y_values(ens1, states).max()
    f2 = _y_values(ens2, states).max()
    dist = np.sqrt(np.sum(np.abs(ens1.unitaries - ens2.unitaries) ** 2))
    if dist == 0.0:
        return 0.0
    return float(abs(f1 - f2) / dist)


@dataclass
class IncrementDiagnostic:
    increments: np.ndarray
    std: float
    scaled_ratio: float
    predicted_sigma: float
    exceedance: dict


def increment_diagnostic(
    dims: BipartiteDims, t: int, psi, phi, trials: int, seed, threads: int | None = None
) -> IncrementDiagnostic:
    """Empirical law of ``Y(psi) - Y(phi)`` over fresh Haar ensembles.

    ``scaled_ratio`` is ``std * sqrt(t d) / ||psi - phi||``; ``exceedance[u]``
    is the frequency of ``|Y(psi) - Y(phi)| >= u * ||psi - phi|| / sqrt(t d)``.
    States equal up to a global phase give identically zero increments.
    """
    psi = as_state(psi, dims)
    phi = as_state(phi, dims)
    seed = _as_seed(seed)
    # collinear states: Y(psi) = Y(phi) identically
    collinear = abs(abs(np.vdot(psi, phi)) - 1.0) < 1e-14
    dist = float(np.linalg.norm(psi - phi))
    states = np.stack([psi, phi], axis=1)

    def one(i):
        if collinear:
            return 0.0
        ens = haar_ensemble(dims, t, substream(seed, i))
        y = _y_values(ens, states)
        return float(y[0] - y[1])

    inc = np.array(map_trials(one, trials, threads))
    std = float(inc.std(ddof=1)) if trials > 1 else 0.0
    sigma = dist / np.sqrt(t * dims.d)
    if collinear or dist == 0.0:
        ratio = 0.0
        exceed = {u: 0.0 for u in (1, 2, 3)}
    else:
        ratio = std / sigma
        exceed = {u: float(np.mean(np.abs(inc) >= u * sigma)) for u in (1, 2, 3)}
    return IncrementDiagnostic(inc, std, ratio, sigma, exceed)
