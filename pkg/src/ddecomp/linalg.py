"""Dense linear-algebra kernel.

Matrices are plain 2-D ``float64`` numpy arrays. LAPACK (through numpy and
scipy) does the heavy lifting; this module adds the validation and error
contracts the solver relies on.
"""

from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import (
    ConvergenceFailure,
    NonFiniteEntry,
    NotPositiveDefinite,
    ShapeMismatch,
    SingularOperator,
)

SYMMETRY_RTOL = 1e-10
INF_SIGMA_FLOOR = 1e-300
SYLVESTER_FLOOR = 1e-14


class SvdResult(NamedTuple):
    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray


def as_matrix(a, name="matrix"):
    """Validate ``a`` as a finite, non-empty 2-D float64 array."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeMismatch(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeMismatch(f"{name} must have at least one row and column")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteEntry(f"{name} contains NaN or Inf")
    return arr


def frobenius_norm(a):
    a = np.asarray(a, dtype=np.float64)
    return float(np.sqrt(np.sum(a * a)))


def _check_symmetric(m, name):
    scale = max(np.max(np.abs(m)), 1.0)
    if np.max(np.abs(m - m.T)) > SYMMETRY_RTOL * scale:
        raise ShapeMismatch(f"{name} is not symmetric")


def solve_spd(m, rhs):
    """Solve ``m @ X = rhs`` for symmetric positive definite ``m`` by Cholesky.

    Raises
    ------
    NotPositiveDefinite
        If the factorization meets a non-positive pivot, which in this package
        almost always means a block update ran without regularization on a
        rank-deficient factor.
    """
    m = np.asarray(m, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeMismatch(f"coefficient matrix must be square, got {m.shape}")
    vector = rhs.ndim == 1
    if vector:
        rhs = rhs[:, None]
    if rhs.shape[0] != m.shape[0]:
        raise ShapeMismatch(f"rhs has {rhs.shape[0]} rows, expected {m.shape[0]}")
    _check_symmetric(m, "coefficient matrix")
    try:
        factor = scipy.linalg.cho_factor(m, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"Cholesky factorization failed: {exc}") from None
    if np.min(np.diag(factor[0])) <= 0.0:
        raise NotPositiveDefinite("non-positive Cholesky pivot")
    x = scipy.linalg.cho_solve(factor, rhs, check_finite=False)
    return x[:, 0] if vector else x


def svd(a):
    """Thin SVD with singular values in non-increasing order."""
    a = np.asarray(a, dtype=np.float64)
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"SVD did not converge: {exc}") from None
    return SvdResult(u, s, vt)


def condition_number(d):
    """2-norm condition number; ``inf`` when the smallest singular value vanishes."""
    d = np.asarray(d, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ShapeMismatch(f"condition number needs a square matrix, got {d.shape}")
    s = np.linalg.svd(d, compute_uv=False)
    if s[-1] <= INF_SIGMA_FLOOR:
        return float("inf")
    return float(s[0] / s[-1])


def pseudo_inverse(a, rcond=1e-12):
    if not 0.0 < rcond < 1.0:
        raise ValueError("rcond must lie in (0, 1)")
    a = np.asarray(a, dtype=np.float64)
    u, s, vt = svd(a)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((a.shape[1], a.shape[0]))
    keep = s > rcond * s[0]
    inv_s = np.zeros_like(s)
    inv_s[keep] = 1.0 / s[keep]
    return (vt.T * inv_s) @ u.T


def solve_sylvester_diag(h, g, alpha, rhs):
    """Solve ``h @ D @ g + alpha * D = rhs`` for symmetric PSD ``h`` and ``g``.

    Both matrices are diagonalized, ``h = Uh diag(lam) Uh^T`` and
    ``g = Ug diag(mu) Ug^T``; in the rotated basis the equation decouples into
    ``(lam_i mu_j + alpha) Dt_ij = Rt_ij``. Cost is O(k^3).
    """
    h = np.asarray(h, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    k1, k2 = h.shape[0], g.shape[0]
    if h.shape != (k1, k1) or g.shape != (k2, k2) or rhs.shape != (k1, k2):
        raise ShapeMismatch(
            f"incompatible Sylvester shapes h{h.shape} g{g.shape} rhs{rhs.shape}"
        )
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    lam, uh = np.linalg.eigh(0.5 * (h + h.T))
    mu, ug = np.linalg.eigh(0.5 * (g + g.T))
    denom = np.outer(lam, mu) + alpha
    if np.min(denom) <= SYLVESTER_FLOOR:
        raise SingularOperator(
            f"Sylvester operator is singular (min eigenvalue {np.min(denom):.3e})"
        )
    rotated = uh.T @ rhs @ ug
    return uh @ (rotated / denom) @ ug.T
