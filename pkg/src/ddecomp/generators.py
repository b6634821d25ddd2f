"""Synthetic test matrices and the fixed worked examples.

All random generators are pure functions of their arguments; each draws from
its own ``(seed, tag)`` stream (see :mod:`ddecomp.rng`).
"""

from dataclasses import dataclass, asdict
from typing import Optional

import numpy as np

from . import rng
from .errors import RankTooLarge, UnknownExample
from .linalg import as_matrix, frobenius_norm

KINDS = ("low_rank", "noisy_sparse", "ill_conditioned", "spectral_decay", "perturbed", "paper_example")


def _orthonormal(seed, tag, n, k):
    q, r = np.linalg.qr(rng.gaussian(seed, tag, (n, k)))
    # Fix the sign ambiguity of QR so the basis is a function of the draw alone.
    return q * np.where(np.diag(r) < 0, -1.0, 1.0)


def gen_low_rank(n, k, seed, m=None):
    """``U V^T`` with ``U`` (n x k) and ``V`` (m x k) orthonormal columns."""
    m = n if m is None else m
    if k > min(n, m):
        raise RankTooLarge(f"rank {k} exceeds min dimension {min(n, m)}")
    u = _orthonormal(seed, "low_rank.U", n, k)
    v = _orthonormal(seed, "low_rank.V", m, k)
    return u @ v.T


def sparse_low_rank_base(n, k, density, seed):
    """Exact rank-``k`` product of sparse Gaussian factors.

    Factor entries are kept with probability ``f`` chosen so that an entry of
    the product is non-zero with probability ``1 - (1 - f^2)^k = density``.
    """
    if not 0 < density <= 1:
        raise ValueError("density must lie in (0, 1]")
    if k > n:
        raise RankTooLarge(f"rank {k} exceeds dimension {n}")
    f = np.sqrt(1.0 - (1.0 - density) ** (1.0 / k)) if density < 1 else 1.0
    left = rng.gaussian(seed, "sparse.L", (n, k))
    right = rng.gaussian(seed, "sparse.R", (k, n))
    left *= rng.stream(seed, "sparse.Lmask").random((n, k)) < f
    right *= rng.stream(seed, "sparse.Rmask").random((k, n)) < f
    return left @ right


def gen_noisy_sparse(n, k, density, sigma_noise, seed):
    """Sparse rank-``k`` base plus dense i.i.d. ``N(0, sigma_noise^2)`` noise."""
    base = sparse_low_rank_base(n, k, density, seed)
    if sigma_noise == 0:
        return base
    return base + sigma_noise * rng.gaussian(seed, "sparse.noise", (n, n))


def ill_conditioned_spectrum(k):
    if k < 2:
        raise ValueError("k must be at least 2")
    i = np.arange(k)
    return 10.0 ** (-6.0 * i / (k - 1))


def gen_ill_conditioned(n, k, seed):
    """``U diag(sigma) V^T`` with ``sigma_i = 10^(-6 (i-1)/(k-1))``."""
    if k > n:
        raise RankTooLarge(f"rank {k} exceeds dimension {n}")
    u = _orthonormal(seed, "ill.U", n, k)
    v = _orthonormal(seed, "ill.V", n, k)
    return (u * ill_conditioned_spectrum(k)) @ v.T


def spectral_decay_spectrum(n):
    return np.exp(-np.arange(1, n + 1) / 10.0)


def gen_spectral_decay(n, seed=0):
    """Symmetric PSD matrix with eigenvalues ``exp(-i/10)`` in a random basis."""
    u = _orthonormal(seed, "decay.U", n, n)
    a = (u * spectral_decay_spectrum(n)) @ u.T
    return 0.5 * (a + a.T)


def gen_perturbed(a0, eps, seed):
    """``a0 + E`` with Gaussian ``E`` rescaled to ``|E|_F = eps``."""
    a0 = as_matrix(a0, "a0")
    if eps < 0:
        raise ValueError("eps must be non-negative")
    if eps == 0:
        return a0.copy()
    e = rng.gaussian(seed, "perturb.E", a0.shape)
    return a0 + e * (eps / frobenius_norm(e))


# --- worked examples -------------------------------------------------------

_EX37_P = np.array(
    [
        [1, 2, 1, 3, 1],
        [2, 1, 2, 1, 2],
        [3, 2, 1, 2, 3],
        [1, 1, 3, 1, 1],
        [2, 3, 1, 2, 1],
    ],
    dtype=float,
)
_EX37_Q = np.array(
    [
        [1, 1, 1, 1, 1],
        [2, 1, 2, 2, 1],
        [1, 3, 1, 2, 1],
        [1, 1, 2, 1, 3],
        [2, 1, 1, 1, 2],
    ],
    dtype=float,
)

EXAMPLE_RANKS = {"ex31": 2, "ex34": 3, "ex35": 2, "ex36_base": 1, "ex37": 5}


def paper_example(example_id):
    """Return ``(A, (P, D, Q) or None)`` for a named worked example."""
    if example_id == "ex31":
        u = np.array([[1, 0], [0, 1], [1, 0], [0, 1]], dtype=float)
        s = np.diag([3.0, 1.0])
        return u @ s @ u.T, (u, s, u.T.copy())
    if example_id == "ex34":
        a = np.diag([2.0, 3.0, 5.0])
        return a, (np.eye(3), a.copy(), np.eye(3))
    if example_id == "ex35":
        u = np.array([[1, 0], [0, 1], [1, 1]], dtype=float)
        s = np.diag([4.0, 1.0])
        return u @ s @ u.T, (u, s, u.T.copy())
    if example_id == "ex36_base":
        u = np.array([[1.0], [2.0], [1.0]])
        v = np.array([[3.0], [0.0], [-1.0]])
        return u @ v.T, (u, np.eye(1), v.T.copy())
    if example_id == "ex37":
        d = np.diag([1.0, 2.0, 3.0, 4.0, 5.0])
        return _EX37_P @ (d @ _EX37_Q), (_EX37_P.copy(), d, _EX37_Q.copy())
    raise UnknownExample(f"unknown example {example_id!r}; choose from {sorted(EXAMPLE_RANKS)}")


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    n: Optional[int] = None
    k: Optional[int] = None
    density: Optional[float] = None
    sigma_noise: Optional[float] = None
    eps: Optional[float] = None
    example_id: Optional[str] = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}")
        required = {
            "low_rank": ("n", "k"),
            "noisy_sparse": ("n", "k", "density", "sigma_noise"),
            "ill_conditioned": ("n", "k"),
            "spectral_decay": ("n",),
            "perturbed": ("n", "k", "eps"),
            "paper_example": ("example_id",),
        }[self.kind]
        missing = [name for name in required if getattr(self, name) is None]
        if missing:
            raise ValueError(f"generator {self.kind!r} needs {', '.join(missing)}")
        if self.density is not None and not 0 < self.density <= 1:
            raise ValueError("density must lie in (0, 1]")
        if self.eps is not None and self.eps < 0:
            raise ValueError("eps must be non-negative")

    def to_dict(self):
        return {key: value for key, value in asdict(self).items() if value is not None}


def generate(spec):
    """Build the matrix described by a :class:`GeneratorSpec`.

    ``perturbed`` perturbs a ``low_rank`` matrix built from the same seed.
    """
    if spec.kind == "low_rank":
        return gen_low_rank(spec.n, spec.k, spec.seed)
    if spec.kind == "noisy_sparse":
        return gen_noisy_sparse(spec.n, spec.k, spec.density, spec.sigma_noise, spec.seed)
    if spec.kind == "ill_conditioned":
        return gen_ill_conditioned(spec.n, spec.k, spec.seed)
    if spec.kind == "spectral_decay":
        return gen_spectral_decay(spec.n, spec.seed)
    if spec.kind == "perturbed":
        return gen_perturbed(gen_low_rank(spec.n, spec.k, spec.seed), spec.eps, spec.seed)
    return paper_example(spec.example_id)[0]
