"""Measurement statistics on a bipartite system H_A (x) H_B."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .divergences import as_prob
from .linalg import BipartiteDims, DimensionError, as_cmatrix, as_cvector

STATE_NORM_TOL = 1e-10
PSD_TOL = 1e-9
COMPLETENESS_TOL = 1e-9


class InvalidPovmError(ValueError):
    pass


def as_state(psi, dims: BipartiteDims) -> np.ndarray:
    """Validate a pure state of H (unit vector of length ``dims.d``)."""
    psi = as_cvector(psi)
    if psi.size != dims.d:
        raise DimensionError(f"state has dimension {psi.size}, expected {dims.d}")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > STATE_NORM_TOL:
        raise ValueError(f"state is not normalized (norm {norm!r})")
    return psi


def marginal_a_batch(vectors: np.ndarray, d_a: int) -> np.ndarray:
    """A-marginals of the last axis of ``vectors``, unnormalized.

    ``vectors[..., a * d_b + b]`` is summed over ``b`` in squared modulus.
    """
    sq = vectors.real**2 + vectors.imag**2
    return sq.reshape(*sq.shape[:-1], d_a, -1).sum(axis=-1)


def marginal_a(psi, dims: BipartiteDims) -> np.ndarray:
    """Outcome distribution of measuring A in the computational basis.

    ``p(a) = sum_b |<a b|psi>|^2``.
    """
    psi = as_state(psi, dims)
    p = marginal_a_batch(psi, dims.d_a)
    return p / p.sum()


@dataclass(frozen=True)
class RankOneEffect:
    """The effect ``weight * |direction><direction|``."""

    weight: float
    direction: np.ndarray

    def __post_init__(self):
        if not 0.0 < self.weight <= 1.0:
            raise ValueError(f"weight must lie in (0, 1], got {self.weight}")
        v = as_cvector(self.direction)
        if abs(np.linalg.norm(v) - 1.0) > STATE_NORM_TOL:
            raise ValueError("effect direction must be a unit vector")
        object.__setattr__(self, "direction", v)

    def matrix(self) -> np.ndarray:
        return self.weight * np.outer(self.direction, self.direction.conj())


@dataclass(frozen=True)
class PovmReport:
    completeness_residual: float
    min_eigenvalue: float

    @property
    def valid(self) -> bool:
        return self.completeness_residual <= COMPLETENESS_TOL and self.min_eigenvalue >= -PSD_TOL


def validate_povm(effects) -> PovmReport:
    """Completeness residual ``||sum M_i - Id||_op`` and smallest effect eigenvalue."""
    mats = [as_cmatrix(m) for m in effects]
    if not mats:
        raise InvalidPovmError("empty POVM")
    d = mats[0].shape[0]
    total = np.zeros((d, d), dtype=np.complex128)
    min_eig = np.inf
    for m in mats:
        if m.shape != (d, d):
            raise DimensionError("POVM effects have inconsistent shapes")
        total += m
        herm = 0.5 * (m + m.conj().T)
        min_eig = min(min_eig, float(np.linalg.eigvalsh(herm)[0]))
    residual = float(np.linalg.norm(total - np.eye(d), 2))
    return PovmReport(residual, min_eig)


def born_probabilities(effects, rho) -> np.ndarray:
    """``p(i) = Tr(M_i rho)``."""
    report = validate_povm(effects)
    if not report.valid:
        raise InvalidPovmError(
            f"invalid POVM: residual {report.completeness_residual:.3e}, min eigenvalue {report.min_eigenvalue:.3e}"
        )
    rho = as_cmatrix(rho)
    if abs(np.trace(rho) - 1.0) > 1e-9:
        raise ValueError("density operator must have unit trace")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0] < -PSD_TOL:
        raise ValueError("density operator is not positive semidefinite")
    # Tr(M rho) = sum_ij M_ij rho_ji
    p = np.array([np.sum(as_cmatrix(m) * rho.T).real for m in effects])
    p = np.where((p < 0) & (p > -1e-10), 0.0, p)
    return as_prob(p / p.sum()) if abs(p.sum() - 1.0) < 1e-9 else as_prob(p)
