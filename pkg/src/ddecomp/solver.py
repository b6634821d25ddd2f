"""Alternating minimization for ``A ~ P D Q``.

One sweep updates the core ``D`` first, then ``P``, then ``Q``. Every block
is an exact minimizer of the penalized objective with the other two blocks
held fixed, so with ``beta = 0`` the objective never increases.
"""

import math
import time
from dataclasses import dataclass, field, asdict
from typing import List, Optional

import numpy as np

from . import rng
from .errors import NumericalError, RankTooLarge, ShapeMismatch, ZeroColumn
from .linalg import (
    as_matrix,
    condition_number,
    frobenius_norm,
    solve_spd,
    solve_sylvester_diag,
    svd,
)
from .regularizers import objective, regularizer_value

D_UPDATES = ("stationary", "closed_form")
INITS = ("random_gaussian", "svd_warm_start")
_ALIASES = {"closed": "closed_form", "random": "random_gaussian", "svd": "svd_warm_start"}


@dataclass
class FactorTriple:
    p: np.ndarray
    d: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        k = self.d.shape[0]
        if self.d.shape != (k, k) or self.p.shape[1] != k or self.q.shape[0] != k:
            raise ShapeMismatch(
                f"inconsistent factor shapes P{self.p.shape} D{self.d.shape} Q{self.q.shape}"
            )

    @property
    def k(self):
        return self.d.shape[0]

    def product(self):
        return self.p @ (self.d @ self.q)

    def copy(self):
        return FactorTriple(self.p.copy(), self.d.copy(), self.q.copy())


@dataclass(frozen=True)
class SolverConfig:
    k: int
    tol: float = 1e-8
    max_iters: int = 500
    d_update: str = "stationary"
    init: str = "random_gaussian"
    seed: int = 0
    relative_tol: bool = False
    track_conditioning: bool = False

    def __post_init__(self):
        object.__setattr__(self, "d_update", _ALIASES.get(self.d_update, self.d_update))
        object.__setattr__(self, "init", _ALIASES.get(self.init, self.init))
        if self.d_update not in D_UPDATES:
            raise ValueError(f"d_update must be one of {D_UPDATES}, got {self.d_update!r}")
        if self.init not in INITS:
            raise ValueError(f"init must be one of {INITS}, got {self.init!r}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.k < 1:
            raise ValueError("k must be at least 1")

    def to_dict(self):
        return asdict(self)


@dataclass
class ConvergenceTrace:
    """Per-sweep history of a :func:`solve` run.

    ``residual[t]`` is ``|A - PDQ|_F`` after sweep ``t + 1``; the values before
    the first sweep are kept in ``initial_*``. ``wall_time`` holds seconds spent
    in each sweep. ``coef_kappa`` is filled only when the solver config asks
    for conditioning tracking and stores, per sweep, the condition numbers of
    the P-, Q- and D-update coefficient matrices.
    """

    initial_objective: float
    initial_residual: float
    objective: List[float] = field(default_factory=list)
    residual: List[float] = field(default_factory=list)
    kappa_d: List[float] = field(default_factory=list)
    wall_time: List[float] = field(default_factory=list)
    coef_kappa: List[tuple] = field(default_factory=list)
    status: str = "max_iters"

    @property
    def iterations(self):
        return len(self.residual)

    @property
    def total_time(self):
        return float(sum(self.wall_time))

    def to_dict(self):
        return asdict(self)


def init_factors(a, cfg):
    a = as_matrix(a, "A")
    n, m = a.shape
    k = cfg.k
    if k > min(n, m):
        raise RankTooLarge(f"rank {k} exceeds min dimension {min(n, m)}")
    if cfg.init == "svd_warm_start":
        u, s, vt = svd(a)
        return FactorTriple(u[:, :k].copy(), np.diag(s[:k]), vt[:k].copy())
    scale = 1.0 / math.sqrt(k)
    p = rng.gaussian(cfg.seed, "init.P", (n, k)) * scale
    q = rng.gaussian(cfg.seed, "init.Q", (k, m)) * scale
    return FactorTriple(p, np.eye(k), q)


def _sym(m):
    return 0.5 * (m + m.T)


def update_p(a, d, q, weight):
    """Solve ``P (D Q Q^T D^T + w I) = A Q^T D^T`` for ``P``."""
    r = d @ q
    coef = _sym(r @ r.T) + weight * np.eye(r.shape[0])
    return solve_spd(coef, r @ a.T).T


def update_q(a, p, d, weight):
    """Solve ``(D^T P^T P D + w I) Q = D^T P^T A`` for ``Q``."""
    left = p @ d
    coef = _sym(left.T @ left) + weight * np.eye(left.shape[1])
    return solve_spd(coef, left.T @ a)


def update_d_stationary(a, p, q, weight):
    """Exact block minimizer: ``P^T P D Q Q^T + w D = P^T A Q^T``."""
    h = _sym(p.T @ p)
    g = _sym(q @ q.T)
    return solve_sylvester_diag(h, g, weight, (p.T @ a) @ q.T)


def update_d_closed(a, p, q, weight):
    """``D = (P^T P)^{-1} P^T A Q^T (Q Q^T + w I)^{-1}`` via two Cholesky solves."""
    h = _sym(p.T @ p)
    g = _sym(q @ q.T) + weight * np.eye(q.shape[0])
    left = solve_spd(h, (p.T @ a) @ q.T)
    return solve_spd(g, left.T).T


def project_condition(d, kappa_cap):
    """Floor the singular values of ``d`` at ``sigma_max / kappa_cap``."""
    if not kappa_cap > 1:
        raise ValueError("kappa_cap must exceed 1")
    d = np.asarray(d, dtype=np.float64)
    u, s, vt = svd(d)
    if s[0] == 0.0:
        return d.copy()
    floor = s[0] / kappa_cap
    if s[-1] >= floor:
        return d.copy()
    return (u * np.maximum(s, floor)) @ vt


def _coef_kappas(p, d, q, reg):
    r = d @ q
    left = p @ d
    kp = condition_number(_sym(r @ r.T) + reg.p_weight * np.eye(d.shape[0]))
    kq = condition_number(_sym(left.T @ left) + reg.q_weight * np.eye(d.shape[0]))
    h = _sym(p.T @ p)
    g = _sym(q @ q.T)
    lam = np.linalg.eigvalsh(h)
    mu = np.linalg.eigvalsh(g)
    spectrum = np.abs(np.outer(lam, mu) + reg.d_weight)
    kd = float(spectrum.max() / spectrum.min()) if spectrum.min() > 0 else float("inf")
    return (kp, kq, kd)


def solve(a, reg, cfg, init=None):
    """Run alternating minimization and return ``(FactorTriple, ConvergenceTrace)``.

    Parameters
    ----------
    a : ndarray, shape (n, m)
    reg : RegularizerConfig
    cfg : SolverConfig
    init : FactorTriple, optional
        Starting factors. Overrides ``cfg.init`` when given; useful for
        running two problems from the exact same starting point.
    """
    a = as_matrix(a, "A")
    if init is None:
        triple = init_factors(a, cfg)
    else:
        if init.p.shape[0] != a.shape[0] or init.q.shape[1] != a.shape[1]:
            raise ShapeMismatch("initial factors do not match A")
        triple = init.copy()
    p, d, q = triple.p, triple.d, triple.q
    cap = reg.effective_cap
    update_d = update_d_stationary if cfg.d_update == "stationary" else update_d_closed

    prev = frobenius_norm(a - p @ (d @ q))
    trace = ConvergenceTrace(
        initial_objective=objective(a, triple, reg), initial_residual=prev
    )
    for t in range(1, cfg.max_iters + 1):
        start = time.perf_counter()
        try:
            d = update_d(a, p, q, reg.d_weight)
            if cap is not None:
                d = project_condition(d, cap)
            p = update_p(a, d, q, reg.p_weight)
            q = update_q(a, p, d, reg.q_weight)
        except NumericalError as exc:
            exc.iteration = t
            raise
        delta = frobenius_norm(a - p @ (d @ q))
        # Bookkeeping below is instrumentation and stays out of the sweep timing.
        trace.wall_time.append(time.perf_counter() - start)
        obj = delta * delta
        if reg.lam:
            obj += reg.lam * regularizer_value(p, d, q, reg)
        trace.residual.append(delta)
        trace.objective.append(obj)
        trace.kappa_d.append(condition_number(d))
        if cfg.track_conditioning:
            trace.coef_kappa.append(_coef_kappas(p, d, q, reg))
        change = abs(delta - prev)
        threshold = cfg.tol * max(prev, np.finfo(float).tiny) if cfg.relative_tol else cfg.tol
        prev = delta
        if change < threshold:
            trace.status = "converged"
            break
    return FactorTriple(p, d, q), trace


def normalize_gauge(t):
    """Canonical representative of ``t`` under diagonal scaling and permutation.

    Applies ``P -> P T, D -> T^{-1} D T^{-1}, Q -> T Q`` with ``T`` chosen so
    that every column of ``P`` has unit norm, then orders the components by
    decreasing ``|D_ii|``. The product ``PDQ`` is unchanged.
    """
    norms = np.sqrt(np.sum(t.p * t.p, axis=0))
    if np.any(norms <= 1e-300):
        raise ZeroColumn("P has a (numerically) zero column; gauge is undefined")
    p = t.p / norms
    d = t.d * norms[:, None] * norms[None, :]
    q = t.q / norms[:, None]
    order = np.argsort(-np.abs(np.diag(d)), kind="stable")
    return FactorTriple(p[:, order], d[np.ix_(order, order)], q[order])
