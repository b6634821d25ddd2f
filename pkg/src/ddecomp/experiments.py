"""Experiment protocols that produce machine-readable reports.

Every protocol is split into independent cells (one per seed, grid point or
size). Cells run serially or on a thread pool capped by the ``DDQ_THREADS``
environment variable, and their records are merged in cell order, so the
report does not depend on the execution mode (timings aside).
"""

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .baselines import cur, randomized_svd, truncated_svd
from .errors import DDecompError
from .generators import gen_low_rank, gen_perturbed, generate
from .linalg import as_matrix, condition_number, frobenius_norm
from .metrics import relative_frobenius_error
from .regularizers import RegularizerConfig
from .solver import init_factors, normalize_gauge, solve

THREADS_ENV = "DDQ_THREADS"


@dataclass
class ExperimentReport:
    """Outcome of one experiment protocol.

    ``runs`` holds one flat record per (cell, method); failed cells carry an
    ``error`` string instead of metrics. ``aggregates`` holds summary
    statistics keyed by the protocol.
    """

    kind: str
    config: dict
    runs: list = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)
    version: str = __version__

    def to_dict(self):
        return {
            "kind": self.kind,
            "config": self.config,
            "runs": self.runs,
            "aggregates": self.aggregates,
            "version": self.version,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(data["kind"], data["config"], list(data["runs"]), dict(data["aggregates"]), data.get("version", ""))

    def successful(self, method=None):
        return [r for r in self.runs if "error" not in r and (method is None or r["method"] == method)]


def thread_count():
    """Worker count from ``DDQ_THREADS``; 0, unset or invalid means serial."""
    raw = os.environ.get(THREADS_ENV, "0").strip()
    try:
        value = int(raw)
    except ValueError:
        return 0
    return max(value, 0)


def _run_cells(cells):
    """Evaluate zero-argument callables, preserving their order in the output."""
    workers = thread_count()
    if workers <= 1 or len(cells) <= 1:
        return [cell() for cell in cells]
    with ThreadPoolExecutor(max_workers=min(workers, len(cells))) as pool:
        return list(pool.map(lambda cell: cell(), cells))


def _isolated(labels, fn):
    """Wrap ``fn`` so a library error becomes an error record for the cell."""

    def cell():
        try:
            return fn()
        except DDecompError as exc:
            return [dict(labels, error=f"{type(exc).__name__}: {exc}")]

    return cell


def _solver_record(a, triple, trace, **labels):
    return dict(
        labels,
        method="ddecomp",
        rel_error=relative_frobenius_error(a, triple.product()),
        frob_error=trace.residual[-1] if trace.residual else trace.initial_residual,
        kappa_d=condition_number(triple.d),
        iters=trace.iterations,
        status=trace.status,
        wall_ms=1e3 * trace.total_time,
    )


def _baseline_record(a, fn, **labels):
    start = time.perf_counter()
    result = fn()
    elapsed = time.perf_counter() - start
    return dict(
        labels,
        method=result.method,
        rel_error=relative_frobenius_error(a, result.approx),
        kappa_d=None,
        iters=None,
        wall_ms=1e3 * elapsed,
    )


def _mean_std(values):
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return {"mean": None, "std": None, "count": 0}
    std = float(values.std(ddof=1)) if values.size > 1 else 0.0
    return {"mean": float(values.mean()), "std": std, "count": int(values.size)}


def _loglog_slope(xs, ys):
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    keep = (xs > 0) & (ys > 0)
    if np.count_nonzero(keep) < 2:
        return None
    return float(np.polyfit(np.log(xs[keep]), np.log(ys[keep]), 1)[0])


def _with_rank(solver, k):
    return solver if solver.k == k else replace(solver, k=k)


# --- method comparison ----------------------------------------------------------


def run_benchmark(classes, k, reg, solver, seeds, rsvd_oversample=10, power_iters=2, cur_oversample=None):
    """Compare the solver with truncated SVD, randomized SVD and CUR.

    Parameters
    ----------
    classes : list of GeneratorSpec
        Matrix classes; each is regenerated with every seed in ``seeds``.
    cur_oversample : int, optional
        Extra columns/rows for CUR beyond ``k``. Defaults to ``k``, so CUR
        samples ``2k`` columns and rows.
    """
    if not classes or not seeds:
        raise ValueError("benchmark needs at least one class and one seed")
    solver = _with_rank(solver, k)
    cur_oversample = k if cur_oversample is None else cur_oversample

    def make_cell(spec, seed):
        def body():
            s = replace(spec, seed=seed)
            a = generate(s)
            labels = {"class": s.kind, "seed": seed}
            out = [
                _baseline_record(a, lambda: truncated_svd(a, k), **labels),
                _baseline_record(
                    a, lambda: randomized_svd(a, k, rsvd_oversample, power_iters, seed), **labels
                ),
                _baseline_record(a, lambda: cur(a, k, cur_oversample, seed), **labels),
            ]
            try:
                triple, trace = solve(a, reg, replace(solver, seed=seed))
                out.append(_solver_record(a, triple, trace, **labels))
            except DDecompError as exc:
                out.append(dict(labels, method="ddecomp", error=f"{type(exc).__name__}: {exc}"))
            return out

        return _isolated({"class": spec.kind, "seed": seed, "method": "all"}, body)

    cells = [make_cell(spec, seed) for spec in classes for seed in seeds]
    runs = [r for chunk in _run_cells(cells) for r in chunk]
    report = ExperimentReport(
        "benchmark",
        {
            "classes": [spec.to_dict() for spec in classes],
            "k": k,
            "regularizer": reg.to_dict(),
            "solver": solver.to_dict(),
            "seeds": list(seeds),
            "rsvd_oversample": rsvd_oversample,
            "power_iters": power_iters,
            "cur_oversample": cur_oversample,
        },
        runs,
    )
    for spec in classes:
        for method in ("truncated_svd", "randomized_svd", "cur", "ddecomp"):
            errs = [r["rel_error"] for r in report.successful(method) if r["class"] == spec.kind]
            report.aggregates[f"{spec.kind}/{method}"] = _mean_std(errs)
    return report


# --- perturbation study ------------------------------------------------------


def run_perturbation_study(n, k, eps_list, reg, solver, seeds):
    """Measure how far the normalized core moves under a perturbation of size eps.

    For each seed the clean matrix ``A0`` and every ``A0 + E(eps)`` are solved
    from the same starting factors, built from ``A0`` under ``solver.init``.
    Records ``|D* - D0|_F`` after gauge normalization of both triples.
    ``aggregates["slope"]`` is the log-log slope of the seed-averaged distance
    against the positive eps values.
    """
    eps_list = [float(e) for e in eps_list]
    if not eps_list or any(e < 0 for e in eps_list) or eps_list != sorted(eps_list):
        raise ValueError("eps_list must be non-empty, non-negative and ascending")
    if not seeds:
        raise ValueError("perturbation study needs at least one seed")
    solver = _with_rank(solver, k)

    def make_cell(seed):
        def body():
            cfg = replace(solver, seed=seed)
            a0 = gen_low_rank(n, k, seed)
            start = init_factors(a0, cfg)
            base, _ = solve(a0, reg, cfg, init=start)
            d0 = normalize_gauge(base).d
            out = []
            for eps in eps_list:
                a = gen_perturbed(a0, eps, seed)
                triple, trace = solve(a, reg, cfg, init=start)
                rec = _solver_record(a, triple, trace, seed=seed, eps=eps)
                rec["d_diff"] = frobenius_norm(normalize_gauge(triple).d - d0)
                rec["residual"] = rec["frob_error"]
                out.append(rec)
            return out

        return body

    runs = [r for chunk in _run_cells([make_cell(s) for s in seeds]) for r in chunk]
    report = ExperimentReport(
        "perturbation",
        {
            "n": n,
            "k": k,
            "eps_list": eps_list,
            "regularizer": reg.to_dict(),
            "solver": solver.to_dict(),
            "seeds": list(seeds),
        },
        runs,
    )
    ok = report.successful()
    mean_diff = []
    for eps in eps_list:
        rows = [r for r in ok if r["eps"] == eps]
        stats = _mean_std([r["d_diff"] for r in rows])
        mean_diff.append(stats["mean"] if stats["mean"] is not None else float("nan"))
        report.aggregates[f"eps={eps!r}"] = {
            "d_diff": stats,
            "residual": _mean_std([r["residual"] for r in rows]),
            "iters": _mean_std([r["iters"] for r in rows]),
        }
    report.aggregates["slope"] = _loglog_slope(eps_list, mean_diff)
    return report


# --- conditioning ablation ---------------------------------------------------


def run_ablation_beta(a, k, beta_list, reg_base, solver, kappa_caps=None):
    """Solve once per beta and record the reconstruction error and kappa(D).

    Parameters
    ----------
    kappa_caps : sequence of float or None, optional
        Cap to pair with each beta (``None`` entries, or omitting the argument,
        keep ``reg_base.kappa_cap`` and its default fallback).
    """
    a = as_matrix(a, "A")
    beta_list = [float(b) for b in beta_list]
    if 0.0 not in beta_list:
        raise ValueError("beta_list must include 0")
    if kappa_caps is None:
        kappa_caps = [None] * len(beta_list)
    if len(kappa_caps) != len(beta_list):
        raise ValueError("kappa_caps must match beta_list in length")
    solver = _with_rank(solver, k)

    def make_cell(beta, cap):
        def body():
            reg = replace(reg_base, beta=beta, kappa_cap=cap if cap is not None else reg_base.kappa_cap)
            triple, trace = solve(a, reg, solver)
            return [_solver_record(a, triple, trace, beta=beta, kappa_cap=reg.effective_cap)]

        return body

    cells = [make_cell(b, c) for b, c in zip(beta_list, kappa_caps)]
    runs = [r for chunk in _run_cells(cells) for r in chunk]
    report = ExperimentReport(
        "ablation",
        {
            "shape": list(a.shape),
            "k": k,
            "beta_list": beta_list,
            "kappa_caps": list(kappa_caps),
            "regularizer": reg_base.to_dict(),
            "solver": solver.to_dict(),
        },
        runs,
    )
    ok = sorted(report.successful(), key=lambda r: r["beta"])
    if ok:
        errs = [r["rel_error"] for r in ok]
        kappas = [r["kappa_d"] for r in ok]
        report.aggregates["error_spread"] = (max(errs) - min(errs)) / min(errs) if min(errs) > 0 else 0.0
        report.aggregates["kappa_non_increasing"] = all(
            later <= earlier * (1 + 1e-9) for earlier, later in zip(kappas, kappas[1:])
        )
        report.aggregates["kappa_ratio"] = kappas[0] / kappas[-1] if kappas[-1] > 0 else math.inf
    return report


# --- hyperparameter sensitivity ----------------------------------------------


def run_sensitivity_sweep(a, k, lambda_grid, alpha_grid, solver, beta=0.0):
    """Full ``lambda x alpha`` grid with ``alpha1 = alpha2 = alpha3 = alpha``."""
    a = as_matrix(a, "A")
    if not lambda_grid or not alpha_grid:
        raise ValueError("sweep grids must be non-empty")
    solver = _with_rank(solver, k)

    def make_cell(lam, alpha):
        def body():
            reg = RegularizerConfig(lam=lam, alpha1=alpha, alpha2=alpha, alpha3=alpha, beta=beta)
            triple, trace = solve(a, reg, solver)
            return [_solver_record(a, triple, trace, lam=lam, alpha=alpha)]

        return _isolated({"lam": lam, "alpha": alpha, "method": "ddecomp"}, body)

    cells = [make_cell(float(lam), float(alpha)) for lam in lambda_grid for alpha in alpha_grid]
    runs = [r for chunk in _run_cells(cells) for r in chunk]
    report = ExperimentReport(
        "sweep",
        {
            "shape": list(a.shape),
            "k": k,
            "lambda_grid": [float(x) for x in lambda_grid],
            "alpha_grid": [float(x) for x in alpha_grid],
            "beta": beta,
            "solver": solver.to_dict(),
        },
        runs,
    )
    errs = [r["rel_error"] for r in report.successful()]
    report.aggregates["cells"] = len(runs)
    report.aggregates["failed_cells"] = len(runs) - len(errs)
    if errs:
        lo, hi = min(errs), max(errs)
        report.aggregates["min_error"] = lo
        report.aggregates["max_error"] = hi
        report.aggregates["max_min_ratio"] = hi / lo if lo > 0 else math.inf
        report.aggregates["error_spread"] = (hi - lo) / lo if lo > 0 else 0.0
    return report


# --- seed stability ------------------------------------------------------------


def run_stability(a, k, reg, solver, n_seeds, seeds=None):
    """Repeat the solve from different random starts.

    Seeds default to ``solver.seed, solver.seed + 1, ...``; passing ``seeds``
    explicitly overrides ``n_seeds``.
    """
    a = as_matrix(a, "A")
    seeds = list(seeds) if seeds is not None else [solver.seed + i for i in range(n_seeds)]
    if len(seeds) < 2:
        raise ValueError("stability needs at least two seeds")
    solver = _with_rank(solver, k)

    def make_cell(seed):
        def body():
            triple, trace = solve(a, reg, replace(solver, seed=seed))
            return [_solver_record(a, triple, trace, seed=seed)]

        return _isolated({"seed": seed, "method": "ddecomp"}, body)

    runs = [r for chunk in _run_cells([make_cell(s) for s in seeds]) for r in chunk]
    report = ExperimentReport(
        "stability",
        {
            "shape": list(a.shape),
            "k": k,
            "regularizer": reg.to_dict(),
            "solver": solver.to_dict(),
            "seeds": seeds,
        },
        runs,
    )
    ok = report.successful()
    for key in ("rel_error", "frob_error", "kappa_d", "wall_ms", "iters"):
        report.aggregates[key] = _mean_std([r[key] for r in ok])
    err = report.aggregates["frob_error"]
    if err["mean"]:
        report.aggregates["cv_error"] = err["std"] / err["mean"]
    return report


# --- runtime scaling -------------------------------------------------------------


def run_runtime_scaling(n_list, k, reg, solver, baselines_on=True, seed=None, rsvd_oversample=10, power_iters=2):
    """Time the solver (and optionally randomized SVD) on low-rank matrices.

    The per-iteration time of a run is the median sweep time, which keeps
    one-off costs such as thread-pool warm-up out of the fit.
    """
    n_list = [int(n) for n in n_list]
    if not n_list or n_list != sorted(n_list):
        raise ValueError("n_list must be non-empty and ascending")
    solver = _with_rank(solver, k)
    seed = solver.seed if seed is None else seed

    # Sizes are timed one after another: concurrent cells would distort timings.
    runs = []
    for n in n_list:
        def body(n=n):
            a = gen_low_rank(n, k, seed)
            triple, trace = solve(a, reg, replace(solver, seed=seed))
            rec = _solver_record(a, triple, trace, n=n, seed=seed)
            rec["per_iter_ms"] = 1e3 * float(np.median(trace.wall_time))
            out = [rec]
            if baselines_on:
                out.append(
                    _baseline_record(
                        a, lambda: randomized_svd(a, k, rsvd_oversample, power_iters, seed), n=n, seed=seed
                    )
                )
            return out

        runs.extend(_isolated({"n": n, "method": "all"}, body)())
    report = ExperimentReport(
        "scaling",
        {
            "n_list": n_list,
            "k": k,
            "regularizer": reg.to_dict(),
            "solver": solver.to_dict(),
            "seed": seed,
            "baselines_on": bool(baselines_on),
            "rsvd_oversample": rsvd_oversample,
            "power_iters": power_iters,
        },
        runs,
    )
    solved = report.successful("ddecomp")
    if len(solved) >= 2:
        report.aggregates["per_iter_slope"] = _loglog_slope(
            [r["n"] for r in solved], [r["per_iter_ms"] for r in solved]
        )
    return report
