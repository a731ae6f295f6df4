"""Locking classical messages with a short key, and hiding them from separable measurements.

A message ``x`` in ``[2^n]`` (system A, ``d_A = 2^n``) and key ``k`` in ``[t]``
are encoded as

    E(x, k) = (1/d_B) sum_b U_k^dag (|x><x| (x) |b><b|) U_k.

Measuring a rank-one effect ``xi |e><e|`` yields the posterior

    P(X = x | e) = (1/alpha) (1/t) sum_k p^A_{U_k e}(x) p(x),

where ``alpha`` normalizes. Messages, keys and outcomes are 0-indexed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .divergences import as_prob, hellinger, total_variation, uniform
from .linalg import BipartiteDims, DimensionError, NoNullspaceError, nullspace_vector, trace_norm
from .measurement import RankOneEffect, marginal_a_batch
from .sampling import make_rng, sample_sphere
from .uncertainty import (
    SEPARABLE,
    FULL_SPHERE,
    SearchOptions,
    UnitaryEnsemble,
    haar_ensemble,
    worst_case_search,
)

# posterior normalizers below this are treated as impossible outcomes
ALPHA_TOL = 1e-14
# smallest overlap accepted as "generic position" in the adversarial construction
OVERLAP_TOL = 1e-10


class DegenerateOutcomeError(ValueError):
    """The effect is orthogonal to every encoded state with positive prior mass."""


class DomainError(ValueError):
    pass


class DegenerateEnsembleError(ValueError):
    pass


@dataclass(frozen=True)
class LockingScheme:
    ensemble: UnitaryEnsemble
    n: int

    def __post_init__(self):
        if self.ensemble.dims.d_a != 2**self.n:
            raise DimensionError(f"d_a = {self.ensemble.dims.d_a} is not 2^{self.n}")

    @property
    def t(self) -> int:
        return self.ensemble.t

    @property
    def dims(self) -> BipartiteDims:
        return self.ensemble.dims

    @classmethod
    def haar(cls, n: int, d_b: int, t: int, rng) -> "LockingScheme":
        return cls(haar_ensemble(BipartiteDims(2**n, d_b), t, rng), n)

    def support_basis(self, x: int, k: int) -> np.ndarray:
        """Orthonormal columns ``U_k^dag |x, b>`` spanning the support of ``E(x, k)``."""
        d_b = self.dims.d_b
        return self.ensemble.unitaries[k][x * d_b : (x + 1) * d_b, :].conj().T


def encode(scheme: LockingScheme, x: int, k: int) -> np.ndarray:
    """Density operator ``E(x, k)``."""
    if not 0 <= x < 2**scheme.n or not 0 <= k < scheme.t:
        raise IndexError(f"(x={x}, k={k}) out of range")
    v = scheme.support_basis(x, k)
    return (v @ v.conj().T) / scheme.dims.d_b


def identification_check(scheme: LockingScheme) -> float:
    """Largest ``| (1/2) ||E(x,k) - E(x',k)||_1 - 1 |`` over ``x != x'`` and all ``k``."""
    worst = 0.0
    n_msg = 2**scheme.n
    for k in range(scheme.t):
        states = [encode(scheme, x, k) for x in range(n_msg)]
        for x in range(n_msg):
            for x2 in range(x + 1, n_msg):
                worst = max(worst, abs(0.5 * trace_norm(states[x] - states[x2]) - 1.0))
    return worst


def _mixture_marginal(scheme: LockingScheme, direction: np.ndarray) -> np.ndarray:
    """``(1/t) sum_k p^A_{U_k e}`` for a unit vector ``e``."""
    v = scheme.ensemble.unitaries @ direction  # (t, d)
    return marginal_a_batch(v, scheme.dims.d_a).mean(axis=0)


def _posterior_and_alpha(scheme, prior, direction):
    prior = as_prob(prior)
    if prior.size != 2**scheme.n:
        raise DimensionError(f"prior has {prior.size} entries, expected {2**scheme.n}")
    direction = np.asarray(direction, dtype=np.complex128)
    if direction.shape != (scheme.dims.d,):
        raise DimensionError(f"effect direction has shape {direction.shape}, expected ({scheme.dims.d},)")
    joint = _mixture_marginal(scheme, direction) * prior
    alpha = joint.sum()
    if alpha < ALPHA_TOL:
        raise DegenerateOutcomeError(f"outcome has probability {alpha:.3e} under the prior")
    return joint / alpha, alpha


def posterior(scheme: LockingScheme, prior, effect: RankOneEffect) -> np.ndarray:
    """Posterior over messages after observing the rank-one ``effect``.

    Raises
    ------
    DegenerateOutcomeError
        If the outcome has (numerically) zero probability.
    """
    return _posterior_and_alpha(scheme, prior, effect.direction)[0]


def posterior_coarse(scheme: LockingScheme, prior, effects: list[RankOneEffect]) -> np.ndarray:
    """Posterior for the coarse effect ``sum_j xi_j |e_j><e_j|``.

    Mixes the rank-one posteriors with weights ``P(J = j | J in A)``, which are
    proportional to ``xi_j alpha_j``.
    """
    posts, weights = [], []
    for eff in effects:
        try:
            post, alpha = _posterior_and_alpha(scheme, prior, eff.direction)
        except DegenerateOutcomeError:
            continue
        posts.append(post)
        weights.append(eff.weight * alpha)
    if not posts:
        raise DegenerateOutcomeError("every fine-grained outcome has zero probability")
    w = np.asarray(weights) / np.sum(weights)
    return np.einsum("j,jx->x", w, np.asarray(posts))


@dataclass
class LockingVerification:
    max_hellinger: float
    max_tv: float
    effects: int
    skipped: int


def verify_locking(scheme: LockingScheme, prior, effects) -> LockingVerification:
    """Largest Hellinger and TV distance between posterior and prior over ``effects``.

    Outcomes of zero probability carry no posterior and are counted in ``skipped``.
    """
    prior = as_prob(prior)
    max_h = max_tv = 0.0
    skipped = 0
    for eff in effects:
        direction = eff.direction if isinstance(eff, RankOneEffect) else np.asarray(eff)
        try:
            post, _ = _posterior_and_alpha(scheme, prior, direction)
        except DegenerateOutcomeError:
            skipped += 1
            continue
        max_h = max(max_h, hellinger(post, prior))
        max_tv = max(max_tv, total_variation(post, prior))
    return LockingVerification(max_h, max_tv, len(effects), skipped)


def hellinger_locking_bound(eps: float, l: float, n: int) -> float:
    """Hellinger locking parameter for messages of min-entropy ``l``.

    ``eps`` when ``l == n``, otherwise ``2 eps / (2^((l-n)/2) - sqrt(2) eps)``.

    Raises
    ------
    DomainError
        Unless ``2^(l-n) > 2 eps^2``.
    """
    if l == n:
        return float(eps)
    if not 2.0 ** (l - n) > 2.0 * eps**2:
        raise DomainError(f"bound needs 2^(l-n) > 2 eps^2 (l={l}, n={n}, eps={eps})")
    return float(2.0 * eps / (2.0 ** ((l - n) / 2.0) - math.sqrt(2.0) * eps))


def key_length_lower_bound(eps: float, n: float) -> float:
    """Minimum key length in bits of any Hellinger ``eps``-locking scheme for ``n``-bit messages.

    ``n`` may be ``math.inf``.
    """
    if not 0.0 < eps < 1.0:
        raise DomainError("eps must lie in (0, 1)")
    tail = 0.0 if math.isinf(n) else 2.0 ** (1.0 - n / 2.0)
    return float(math.log2(1.0 / (2.0 * eps**2 + tail)))


def fhs_parameter_check(eps: float, d_b: int, t: int, d: int) -> dict:
    """Conditions and success-probability bound of the earlier metric-uncertainty theorem.

    The raw bound ``1 - 4 exp(-d (eps^2 t / 144 - 2 ln(9/eps)))`` is returned
    alongside its value clipped to ``[0, 1]``.
    """
    if not 0.0 < eps < 1.0:
        raise DomainError("eps must lie in (0, 1)")
    d_b_min = 9.0 / eps**2
    t_min = 72.0 * 16.0 * math.log(9.0 / eps) / eps**2
    exponent = -d * (eps**2 * t / 144.0 - 2.0 * math.log(9.0 / eps))
    raw = 1.0 - 4.0 * math.exp(exponent) if exponent < 700 else -math.inf
    return {
        "d_b_min": d_b_min,
        "t_min_exclusive": t_min,
        "d_b_ok": d_b >= d_b_min,
        "t_ok": t > t_min,
        "probability_bound_raw": raw,
        "probability_bound": min(max(raw, 0.0), 1.0),
    }


def locking_accounting(n: int, eps: float) -> dict:
    """Leading terms of the qubit count and key length; additive O(1) terms are omitted."""
    return {
        "qubits_leading": n + 2.0 * math.log2(1.0 / eps),
        "key_bits_leading": 2.0 * math.log2(1.0 / eps),
        "omitted": "O(1)",
    }


def uniform_on_subset(support, n: int) -> np.ndarray:
    """Uniform prior on ``support``; min-entropy ``log2 |support|``."""
    p = np.zeros(2**n)
    p[list(support)] = 1.0 / len(support)
    return p


# ---------------------------------------------------------------------------
# adversarial measurement


@dataclass
class AdversarialPovm:
    """Effects ``M_{x,k} = |e_xk><e_xk| / (|S| t)`` plus ``M_fail = Id - sum M_{x,k}``."""

    support: list
    t: int
    directions: dict = field(repr=False)
    effects: dict = field(repr=False)
    fail: np.ndarray = field(repr=False)

    def as_list(self) -> list:
        return [self.effects[key] for key in sorted(self.effects)] + [self.fail]


def build_adversarial_povm(scheme: LockingScheme, support) -> AdversarialPovm:
    """Measurement that identifies ``(x, k)`` with certainty whenever it reports ``(x, k)``.

    ``e_xk`` is the smallest right singular vector of the supports of all other
    encodings ``E(y, i)``, ``(y, i) != (x, k)``, ``y`` in ``support``.

    Raises
    ------
    DomainError
        If ``(t |S| - 1) d_B >= d``, so no orthogonal direction need exist.
    DegenerateEnsembleError
        If some ``e_xk`` is also orthogonal to the support of ``E(x, k)``.
    """
    support = sorted(set(int(x) for x in support))
    if not support or min(support) < 0 or max(support) >= 2**scheme.n:
        raise ValueError("support must be a non-empty subset of the message set")
    d, d_b, t = scheme.dims.d, scheme.dims.d_b, scheme.t
    if (t * len(support) - 1) * d_b >= d:
        raise DomainError(f"(t|S| - 1) d_B = {(t * len(support) - 1) * d_b} >= d = {d}")
    weight = 1.0 / (len(support) * t)
    blocks = {(y, i): scheme.support_basis(y, i) for y in support for i in range(t)}
    directions, effects = {}, {}
    total = np.zeros((d, d), dtype=np.complex128)
    for key in blocks:
        others = [blocks[o][:, b] for o in blocks if o != key for b in range(d_b)]
        try:
            e = nullspace_vector(others, d)
        except NoNullspaceError as exc:
            raise DegenerateEnsembleError(str(exc)) from exc
        if np.max(np.abs(blocks[key].conj().T @ e)) < OVERLAP_TOL:
            raise DegenerateEnsembleError(f"direction for {key} misses the support of E{key}")
        directions[key] = e
        effects[key] = weight * np.outer(e, e.conj())
        total += effects[key]
    fail = np.eye(d) - total
    fail = 0.5 * (fail + fail.conj().T)
    return AdversarialPovm(support, t, directions, effects, fail)


def adversary_conditionals(scheme: LockingScheme, povm: AdversarialPovm) -> dict:
    """``P(X = x, K = k | I = (x, k))`` for every indexed outcome, by Bayes over the joint law."""
    s = len(povm.support)
    out = {}
    for key, m in povm.effects.items():
        joint = {
            (y, i): np.real(np.trace(encode(scheme, y, i) @ m)) / (s * povm.t)
            for y in povm.support
            for i in range(povm.t)
        }
        total = sum(joint.values())
        out[key] = joint[key] / total if total > 0 else float("nan")
    return out


# ---------------------------------------------------------------------------
# data hiding against separable measurements


@dataclass
class DataHidingResult:
    max_sampled: float
    max_searched: float
    separable_sup_y: float
    max_hellinger: float
    entangled_sup_y: float | None = None
    entangled_max_hellinger: float | None = None


def data_hiding_eval(
    ensemble: UnitaryEnsemble,
    prior,
    n_effects: int,
    rng,
    search: SearchOptions | None = None,
    compare_entangled: bool = False,
) -> DataHidingResult:
    """Largest posterior Hellinger distance over separable rank-one effects, single unitary.

    Effects ``psi_A (x) psi_B`` are sampled uniformly and also used to seed a
    separable worst-case search; the best searched effect is evaluated too.
    With ``compare_entangled`` the search is repeated over all of H, seeded
    with the separable optimum.
    """
    if ensemble.t != 1:
        raise ValueError("data hiding uses a single unitary (t = 1)")
    dims = ensemble.dims
    n = int(round(math.log2(dims.d_a)))
    scheme = LockingScheme(ensemble, n)
    prior = as_prob(prior)
    rng = make_rng(rng)
    a = sample_sphere(dims.d_a, rng, size=n_effects)
    b = sample_sphere(dims.d_b, rng, size=n_effects)
    directions = [np.kron(ai, bi) for ai, bi in zip(a, b)]
    sampled = verify_locking(scheme, prior, directions).max_hellinger
    search = search or SearchOptions(restarts=8, max_iter=1000)
    rep = worst_case_search(ensemble, SEPARABLE, search, rng=rng, initial_states=list(zip(a, b)))
    searched = verify_locking(scheme, prior, [rep.worst_state]).max_hellinger
    result = DataHidingResult(sampled, searched, rep.y, max(sampled, searched))
    if compare_entangled:
        full = worst_case_search(ensemble, FULL_SPHERE, search, rng=rng, initial_states=[rep.worst_state])
        result.entangled_sup_y = full.y
        result.entangled_max_hellinger = verify_locking(scheme, prior, [full.worst_state]).max_hellinger
    return result


def uniform_prior(n: int) -> np.ndarray:
    return uniform(2**n)
