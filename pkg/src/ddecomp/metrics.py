"""Error and structure measures used in the experiments."""

from dataclasses import dataclass

import numpy as np

from .errors import EmptyMask, NotSymmetric, ShapeMismatch, ZeroMatrix
from .linalg import condition_number, frobenius_norm, svd

SYMMETRY_TOL = 1e-8


@dataclass
class AlignmentReport:
    weights: np.ndarray
    alignment_ratio: float
    k: int


def _same_shape(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    return a, b


def relative_frobenius_error(a, approx):
    a, approx = _same_shape(a, approx)
    norm = frobenius_norm(a)
    if norm == 0:
        raise ZeroMatrix("relative error is undefined for a zero reference matrix")
    return frobenius_norm(a - approx) / norm


def rmse_masked(a, approx, mask):
    """Root-mean-square error over the entries where ``mask`` is true."""
    a, approx = _same_shape(a, approx)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != a.shape:
        raise ShapeMismatch(f"mask shape {mask.shape} does not match {a.shape}")
    count = np.count_nonzero(mask)
    if count == 0:
        raise EmptyMask("mask selects no entries")
    diff = (a - approx)[mask]
    return float(np.sqrt(np.dot(diff, diff) / count))


def energy_alignment(a, p):
    """Share of ``|P|_F^2`` lying in the span of the top-k eigenvectors of ``a``.

    ``weights[i] = |u_i^T P|^2``; the ratio divides their sum by ``|P|_F^2``.
    """
    a = np.asarray(a, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeMismatch("energy alignment needs a square matrix")
    scale = max(np.max(np.abs(a)), 1.0)
    if np.max(np.abs(a - a.T)) > SYMMETRY_TOL * scale:
        raise NotSymmetric("matrix is not symmetric within tolerance")
    if p.ndim != 2 or p.shape[0] != a.shape[0]:
        raise ShapeMismatch(f"P has shape {p.shape}, expected ({a.shape[0]}, k)")
    total = float(np.sum(p * p))
    if total == 0:
        raise ZeroMatrix("P is zero")
    k = p.shape[1]
    # For a symmetric PSD matrix the left singular vectors are its eigenvectors.
    u = svd(0.5 * (a + a.T)).u[:, :k]
    weights = np.sum((u.T @ p) ** 2, axis=1)
    return AlignmentReport(weights, float(weights.sum() / total), k)


def kappa_of_core(triple):
    return condition_number(triple.d)
