"""Regularization functional and the penalized objective."""

import math
from dataclasses import dataclass, asdict
from typing import Optional

import numpy as np

from .errors import ShapeMismatch
from .linalg import condition_number

DEFAULT_KAPPA_CAP = 1e4


@dataclass(frozen=True)
class RegularizerConfig:
    """Weights of ``lam * (a1|P|^2 + a2|D|^2 + a3|Q|^2 + beta log kappa(D))``.

    ``kappa_cap`` is the condition-number ceiling enforced on ``D`` whenever
    ``beta > 0``; it falls back to ``DEFAULT_KAPPA_CAP`` if left unset.
    """

    lam: float = 1.0
    alpha1: float = 1e-3
    alpha2: float = 1e-3
    alpha3: float = 1e-3
    beta: float = 0.0
    kappa_cap: Optional[float] = None

    def __post_init__(self):
        for name in ("lam", "alpha1", "alpha2", "alpha3", "beta"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and non-negative, got {value}")
        if self.kappa_cap is not None and not self.kappa_cap > 1:
            raise ValueError(f"kappa_cap must exceed 1, got {self.kappa_cap}")

    @property
    def p_weight(self):
        return self.lam * self.alpha1

    @property
    def d_weight(self):
        return self.lam * self.alpha2

    @property
    def q_weight(self):
        return self.lam * self.alpha3

    @property
    def effective_cap(self):
        """Cap used by the condition projection, or ``None`` when inactive."""
        if self.beta <= 0:
            return None
        return self.kappa_cap if self.kappa_cap is not None else DEFAULT_KAPPA_CAP

    def to_dict(self):
        return asdict(self)


def _check_shapes(p, d, q):
    p, d, q = (np.asarray(x, dtype=np.float64) for x in (p, d, q))
    k = d.shape[0]
    if d.shape != (k, k) or p.ndim != 2 or p.shape[1] != k or q.ndim != 2 or q.shape[0] != k:
        raise ShapeMismatch(
            f"factor shapes P{p.shape} D{d.shape} Q{q.shape} do not share a rank"
        )
    return p, d, q


def regularizer_value(p, d, q, cfg):
    p, d, q = _check_shapes(p, d, q)
    value = (
        cfg.alpha1 * float(np.sum(p * p))
        + cfg.alpha2 * float(np.sum(d * d))
        + cfg.alpha3 * float(np.sum(q * q))
    )
    if cfg.beta > 0:
        kappa = condition_number(d)
        if math.isinf(kappa):
            return float("inf")
        value += cfg.beta * math.log(kappa)
    return value


def objective(a, triple, cfg):
    """``|A - PDQ|_F^2 + lam * R(P, D, Q)``."""
    a = np.asarray(a, dtype=np.float64)
    p, d, q = _check_shapes(triple.p, triple.d, triple.q)
    if a.shape != (p.shape[0], q.shape[1]):
        raise ShapeMismatch(f"A{a.shape} is incompatible with PDQ ({p.shape[0]}, {q.shape[1]})")
    resid = a - p @ (d @ q)
    fidelity = float(np.sum(resid * resid))
    if cfg.lam == 0:
        return fidelity
    return fidelity + cfg.lam * regularizer_value(p, d, q, cfg)
