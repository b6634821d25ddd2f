"""Reference low-rank approximations: truncated SVD, randomized SVD and CUR."""

from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import RankTooLarge
from .linalg import as_matrix, pseudo_inverse, svd


@dataclass
class LowRankApprox:
    approx: np.ndarray
    rank: int
    method: str
    metadata: dict = field(default_factory=dict)


def _check_rank(a, c):
    if not 1 <= c <= min(a.shape):
        raise RankTooLarge(f"rank {c} is outside [1, {min(a.shape)}]")


def truncated_svd(a, k):
    a = as_matrix(a, "A")
    _check_rank(a, k)
    u, s, vt = svd(a)
    return LowRankApprox((u[:, :k] * s[:k]) @ vt[:k], k, "truncated_svd")


def randomized_svd(a, k, oversample=10, power_iters=2, seed=0):
    """Gaussian range finder with subspace (power) iterations.

    The sketch ``A @ Omega`` has ``k + oversample`` columns; each power step
    re-orthonormalizes after multiplying by ``A^T`` and by ``A``.
    """
    a = as_matrix(a, "A")
    width = k + oversample
    _check_rank(a, k)
    if width > min(a.shape):
        raise RankTooLarge(f"k + oversample = {width} exceeds min dimension {min(a.shape)}")
    omega = rng.gaussian(seed, "rsvd.omega", (a.shape[1], width))
    basis, _ = np.linalg.qr(a @ omega)
    for _ in range(power_iters):
        z, _ = np.linalg.qr(a.T @ basis)
        basis, _ = np.linalg.qr(a @ z)
    u_small, s, vt = svd(basis.T @ a)
    u = basis @ u_small[:, :k]
    return LowRankApprox(
        (u * s[:k]) @ vt[:k],
        k,
        "randomized_svd",
        {"oversample": oversample, "power_iters": power_iters, "seed": seed},
    )


def _length_squared_sample(weights, count, gen):
    total = weights.sum()
    if total == 0:
        probs = np.full(weights.size, 1.0 / weights.size)
    else:
        probs = weights / total
    nonzero = np.count_nonzero(probs)
    if nonzero < count:
        # Fewer non-zero lines than requested: take them all, then fill uniformly.
        chosen = np.flatnonzero(probs)
        rest = np.setdiff1d(np.arange(weights.size), chosen)
        extra = gen.choice(rest, size=count - nonzero, replace=False)
        return np.sort(np.concatenate([chosen, extra]))
    return np.sort(gen.choice(weights.size, size=count, replace=False, p=probs))


def cur(a, k, oversample=10, seed=0):
    """CUR with length-squared row/column sampling and a pseudoinverse core.

    ``k + oversample`` columns and rows are drawn without replacement with
    probabilities proportional to their squared norms; the core is
    ``C^+ A R^+``.
    """
    a = as_matrix(a, "A")
    c = k + oversample
    _check_rank(a, k)
    if c > min(a.shape):
        raise RankTooLarge(f"k + oversample = {c} exceeds min dimension {min(a.shape)}")
    sq = a * a
    cols = _length_squared_sample(sq.sum(axis=0), c, rng.stream(seed, "cur.cols"))
    rows = _length_squared_sample(sq.sum(axis=1), c, rng.stream(seed, "cur.rows"))
    cmat = a[:, cols]
    rmat = a[rows, :]
    core = pseudo_inverse(cmat) @ a @ pseudo_inverse(rmat)
    return LowRankApprox(
        cmat @ core @ rmat,
        c,
        "cur",
        {"columns": cols.tolist(), "rows": rows.tolist(), "seed": seed},
    )
