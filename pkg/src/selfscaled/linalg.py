"""Small dense linear-algebra kernels used by the optimizers.

Vectors are 1-D numpy arrays and symmetric matrices are 2-D numpy arrays
whose lower triangle is authoritative: every update in this module writes
the lower triangle and mirrors it into the upper one, so ``A[i, j] ==
A[j, i]`` holds bit-for-bit.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

DEFAULT_DTYPE = np.float64


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


def as_vector(v, dtype=DEFAULT_DTYPE) -> np.ndarray:
    a = np.array(v, dtype=dtype).reshape(-1)
    if a.size < 1:
        raise DimensionError("vector must have at least one entry")
    return a


def identity(n: int, dtype=DEFAULT_DTYPE) -> np.ndarray:
    return np.eye(n, dtype=dtype)


def _check_same_len(a: np.ndarray, b: np.ndarray) -> None:
    if a.ndim != 1 or b.ndim != 1 or a.shape[0] != b.shape[0]:
        raise DimensionError(f"length mismatch: {a.shape} vs {b.shape}")


def dot(a: np.ndarray, b: np.ndarray) -> float:
    """Inner product ``sum_i a_i b_i``.

    Deterministic for a given input (same bits in, same bits out), which is
    what the bit-identical trace requirement needs.
    """
    _check_same_len(a, b)
    return float(np.dot(a, b))


def norm2(a: np.ndarray) -> float:
    return float(np.sqrt(np.dot(a, a)))


def norm_inf(a: np.ndarray) -> float:
    return float(np.max(np.abs(a)))


def mirror_lower(A: np.ndarray) -> np.ndarray:
    """Copy the strict lower triangle onto the upper one, in place."""
    iu = np.triu_indices(A.shape[0], 1)
    A[iu] = A.T[iu]
    return A


def is_symmetric(A: np.ndarray) -> bool:
    return bool(np.array_equal(A, A.T))


def sym_matvec(A: np.ndarray, v: np.ndarray) -> np.ndarray:
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] != v.shape[0]:
        raise DimensionError(f"cannot multiply {A.shape} by {v.shape}")
    return A @ v


def rank1_sym_update(A: np.ndarray, c: float, u: np.ndarray) -> np.ndarray:
    """Return ``A + c u u^T`` as a new symmetric matrix."""
    if A.shape != (u.shape[0], u.shape[0]):
        raise DimensionError(f"cannot update {A.shape} with {u.shape}")
    if c == 0.0:
        return A.copy()
    out = A + c * np.outer(u, u)
    return mirror_lower(out)


def spd_factor(A: np.ndarray, rel_tol: float = 1e-14) -> np.ndarray | None:
    """Cholesky factor ``L`` with ``L L^T = A``, or ``None`` if ``A`` is not SPD.

    A pivot at or below ``rel_tol * max(diag(A))`` counts as a failure.
    Only the lower triangle of ``A`` is read.
    """
    n = A.shape[0]
    if A.shape != (n, n):
        raise DimensionError(f"not square: {A.shape}")
    diag_max = float(np.max(np.diag(A)))
    if not np.isfinite(diag_max) or diag_max <= 0.0:
        return None
    tol = rel_tol * diag_max
    L = np.zeros_like(A)
    for j in range(n):
        row = L[j, :j]
        d = A[j, j] - np.dot(row, row)
        if not d > tol:
            return None
        ljj = np.sqrt(d)
        L[j, j] = ljj
        if j + 1 < n:
            L[j + 1:, j] = (A[j + 1:, j] - L[j + 1:, :j] @ row) / ljj
    return L


def spd_solve(L: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``(L L^T) x = b`` given the lower Cholesky factor."""
    z = solve_triangular(L, b, lower=True)
    return solve_triangular(L.T, z, lower=False)
