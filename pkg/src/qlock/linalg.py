"""Dense complex linear algebra kernels.

Vectors and matrices are plain ``numpy`` arrays of dtype ``complex128``.
A bipartite basis index ``(a, b)`` flattens to ``a * d_b + b`` (A-major),
so the B-blocks of a vector are contiguous.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DimensionError(ValueError):
    """Raised when array shapes do not match the requested operation."""


class NoNullspaceError(ValueError):
    """Raised when a set of vectors spans the whole space."""


# singular value below which a direction is accepted as a nullspace vector
NULLSPACE_TOL = 1e-8


@dataclass(frozen=True)
class BipartiteDims:
    """Dimensions of H = H_A (x) H_B."""

    d_a: int
    d_b: int

    def __post_init__(self):
        if int(self.d_a) < 1 or int(self.d_b) < 1:
            raise DimensionError(f"dimensions must be positive, got ({self.d_a}, {self.d_b})")

    @property
    def d(self) -> int:
        return self.d_a * self.d_b


def as_cvector(v) -> np.ndarray:
    arr = np.asarray(v, dtype=np.complex128)
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionError(f"expected a non-empty 1-d vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector has non-finite entries")
    return arr


def as_cmatrix(m) -> np.ndarray:
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2 or arr.size == 0:
        raise DimensionError(f"expected a non-empty 2-d matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    return arr


def tensor(u, v) -> np.ndarray:
    """Kronecker product of two vectors, entry ``i * len(v) + j`` is ``u[i] * v[j]``."""
    return np.kron(as_cvector(u), as_cvector(v))


def basis_state(index: int, d: int) -> np.ndarray:
    e = np.zeros(d, dtype=np.complex128)
    e[index] = 1.0
    return e


def product_basis_state(a: int, b: int, dims: BipartiteDims) -> np.ndarray:
    return basis_state(a * dims.d_b + b, dims.d)


def partial_trace_b(rho, dims: BipartiteDims) -> np.ndarray:
    """Trace out the B subsystem of a ``d x d`` operator.

    Returns the ``d_a x d_a`` matrix with entries
    ``sum_b rho[(a, b), (a', b)]``.
    """
    rho = as_cmatrix(rho)
    if rho.shape != (dims.d, dims.d):
        raise DimensionError(f"operator of shape {rho.shape} does not act on d={dims.d}")
    blocks = rho.reshape(dims.d_a, dims.d_b, dims.d_a, dims.d_b)
    return np.einsum("ibjb->ij", blocks)


def _require_square(m: np.ndarray) -> None:
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")


def trace_norm(m) -> float:
    """Sum of singular values, ``Tr sqrt(M^dag M)``."""
    m = as_cmatrix(m)
    _require_square(m)
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def hs_norm(m) -> float:
    """Hilbert-Schmidt (Frobenius) norm."""
    return float(np.linalg.norm(as_cmatrix(m), "fro"))


def operator_norm(m) -> float:
    """Largest singular value."""
    return float(np.linalg.svd(as_cmatrix(m), compute_uv=False)[0])


def nullspace_vector(columns, d: int) -> np.ndarray:
    """Unit vector orthogonal to every vector in ``columns``.

    The vector is the right singular vector of the stacked (conjugated)
    columns with the smallest singular value. An empty list returns the
    first canonical basis vector.

    Raises
    ------
    NoNullspaceError
        If the columns span all of C^d.
    """
    if len(columns) == 0:
        return basis_state(0, d)
    rows = np.stack([as_cvector(c) for c in columns]).conj()
    if rows.shape[1] != d:
        raise DimensionError(f"columns have dimension {rows.shape[1]}, expected {d}")
    # rows @ x = <c_i|x>; pad so that the full right singular basis is returned
    if rows.shape[0] < d:
        rows = np.vstack([rows, np.zeros((d - rows.shape[0], d), dtype=np.complex128)])
    _, s, vh = np.linalg.svd(rows)
    if s[-1] >= NULLSPACE_TOL:
        raise NoNullspaceError(f"columns span C^{d} (smallest singular value {s[-1]:.3e})")
    x = vh[-1].conj()
    return x / np.linalg.norm(x)


def is_unitary(u, tol: float = 1e-9) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return hs_norm(u.conj().T @ u - np.eye(u.shape[0])) < tol
