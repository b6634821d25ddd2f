"""Command-line entry point: ``ddecomp <command> [options]``.

Exit codes: 0 success, 2 usage, 3 bad input data, 4 numerical failure,
5 file I/O failure.
"""

import argparse
import json
import sys

from . import __version__
from . import experiments as ex
from .config import ConfigError, as_list, load_config, parse_scalar
from .errors import DataError, IoError, NumericalError
from .generators import KINDS, GeneratorSpec, generate
from .io import FORMATS, dumps_report, read_matrix, write_factors, write_matrix, write_report
from .regularizers import RegularizerConfig
from .solver import SolverConfig, solve

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4, 5

DEFAULT_LAMBDAS = [1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1]
DEFAULT_ALPHAS = [1e-4, 3e-4, 1e-3, 3e-3, 1e-2]
DEFAULT_BETAS = [0.0, 1e-3, 1e-2, 1e-1]


class UsageError(ValueError):
    pass


# --- argument parsing ---------------------------------------------------------


def _add_common(p, source=False, model=True):
    p.add_argument("--seed", type=int, required=True, help="seed for every random draw (required)")
    p.add_argument("--out", required=True, help="output path (prefix for decompose)")
    p.add_argument("--config", help="typed key-value config file")
    if source:
        group = p.add_mutually_exclusive_group()
        group.add_argument("--input", help="matrix file (MatrixMarket or CSV)")
        group.add_argument("--gen", metavar="SPEC", help="generator spec, e.g. low_rank:n=500,k=50")
    if model:
        p.add_argument("--rank", "-k", type=int, help="target rank k")
        p.add_argument("--lambda", dest="lam", type=float, help="overall regularization weight")
        p.add_argument("--alpha", type=float, help="sets alpha1, alpha2 and alpha3 together")
        p.add_argument("--alpha1", type=float)
        p.add_argument("--alpha2", type=float)
        p.add_argument("--alpha3", type=float)
        p.add_argument("--beta", type=float, help="weight of the log-condition term")
        p.add_argument("--kappa-cap", type=float, help="condition-number ceiling on D")
        p.add_argument("--tol", type=float)
        p.add_argument("--max-iters", type=int)
        p.add_argument("--d-update", choices=["stationary", "closed"])
        p.add_argument("--init", choices=["random", "svd"])


def build_parser():
    parser = argparse.ArgumentParser(prog="ddecomp", description="Regularized A ~ PDQ decomposition.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="factor one matrix; write factors and trace")
    _add_common(p, source=True)
    p.add_argument("--normalize", action="store_true", help="gauge-normalize factors before writing")

    p = sub.add_parser("generate", help="write a synthetic matrix")
    _add_common(p, model=False)
    p.add_argument("--gen", metavar="SPEC", help="generator spec, e.g. noisy_sparse:n=500,k=50,density=0.05,sigma_noise=0.01")
    p.add_argument("--format", choices=FORMATS, default="mtx")

    for name, text, source in (
        ("benchmark", "compare against SVD, randomized SVD and CUR", False),
        ("perturb", "core drift under perturbations of growing size", False),
        ("ablate", "sweep the log-condition weight beta", True),
        ("sweep", "lambda x alpha sensitivity grid", True),
        ("stability", "repeat from several random starts", True),
        ("scaling", "per-iteration runtime against n", False),
    ):
        p = sub.add_parser(name, help=text)
        _add_common(p, source=source)
    return parser


# --- resolution of flags + config ------------------------------------------------


def _pick(flag, section, *keys, default=None):
    if flag is not None:
        return flag
    for key in keys:
        if key in section:
            return section[key]
    return default


def parse_gen_spec(text, seed):
    """``kind:key=value,...`` -> :class:`GeneratorSpec` with the given seed."""
    kind, _, rest = text.partition(":")
    kind = kind.strip()
    if kind not in KINDS:
        raise UsageError(f"unknown generator {kind!r}; choose from {', '.join(KINDS)}")
    params = {}
    for item in filter(None, (x.strip() for x in rest.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise UsageError(f"generator parameter {item!r} is not key=value")
        params[key.strip().replace("-", "_")] = parse_scalar(value)
    return _spec_from(kind, params, seed)


def _spec_from(kind, params, seed):
    allowed = {"n", "k", "density", "sigma_noise", "eps", "example_id"}
    unknown = set(params) - allowed
    if unknown:
        raise UsageError(f"unknown generator parameters: {', '.join(sorted(unknown))}")
    return GeneratorSpec(kind=kind, seed=seed, **params)


def _matrix_source(args, cfg):
    """Return ``(matrix, description)`` from exactly one of file or generator."""
    section = cfg.get("matrix", {})
    path = args.input if getattr(args, "input", None) else None
    gen = args.gen if getattr(args, "gen", None) else None
    if path is None and gen is None:
        path = section.get("input")
        if "kind" in section:
            params = {k: v for k, v in section.items() if k not in ("kind", "input")}
            spec = _spec_from(section["kind"], params, args.seed)
            if path is not None:
                raise UsageError("[matrix] must give either input or kind, not both")
            return generate(spec), {"generator": spec.to_dict()}
    if gen is not None:
        spec = parse_gen_spec(gen, args.seed)
        return generate(spec), {"generator": spec.to_dict()}
    if path is None:
        raise UsageError("a matrix source is required: --input PATH or --gen SPEC")
    return read_matrix(path), {"input": str(path)}


def _regularizer(args, cfg, **defaults):
    section = cfg.get("regularizer", {})
    base = RegularizerConfig(**defaults)
    alpha = _pick(getattr(args, "alpha", None), section, "alpha")
    values = {}
    for name in ("alpha1", "alpha2", "alpha3"):
        own = _pick(getattr(args, name, None), section, name)
        values[name] = own if own is not None else (alpha if alpha is not None else getattr(base, name))
    return RegularizerConfig(
        lam=float(_pick(args.lam, section, "lambda", "lam", default=base.lam)),
        beta=float(_pick(args.beta, section, "beta", default=base.beta)),
        kappa_cap=_pick(args.kappa_cap, section, "kappa_cap", default=base.kappa_cap),
        **{k: float(v) for k, v in values.items()},
    )


def _solver(args, cfg, k_default=None):
    section = cfg.get("solver", {})
    k = _pick(args.rank, section, "rank", "k", default=k_default)
    if k is None:
        raise UsageError("the target rank is required: --rank K")
    base = SolverConfig(k=int(k))
    return SolverConfig(
        k=int(k),
        tol=float(_pick(args.tol, section, "tol", default=base.tol)),
        max_iters=int(_pick(args.max_iters, section, "max_iters", default=base.max_iters)),
        d_update=_pick(args.d_update, section, "d_update", default=base.d_update),
        init=_pick(args.init, section, "init", default=base.init),
        seed=args.seed,
        relative_tol=bool(section.get("relative_tol", base.relative_tol)),
        track_conditioning=bool(section.get("track_conditioning", base.track_conditioning)),
    )


def _seeds(args, exp, default_count):
    seeds = as_list(exp.get("seeds"))
    if seeds is None:
        seeds = [args.seed + i for i in range(int(exp.get("n_seeds", default_count)))]
    return [int(s) for s in seeds]


def _floats(value):
    return [float(v) for v in as_list(value)]


# --- commands ---------------------------------------------------------------------


def cmd_decompose(args, cfg):
    a, source = _matrix_source(args, cfg)
    reg = _regularizer(args, cfg)
    solver = _solver(args, cfg)
    triple, trace = solve(a, reg, solver)
    write_factors(args.out, triple, normalize=args.normalize)
    doc = {
        "source": source,
        "regularizer": reg.to_dict(),
        "solver": solver.to_dict(),
        "trace": trace.to_dict(),
        "version": __version__,
    }
    write_report(args.out + ".trace.json", doc)
    last = trace.residual[-1] if trace.residual else trace.initial_residual
    print(f"k={triple.k} iterations={trace.iterations} status={trace.status} residual={last:.6g}")


def cmd_generate(args, cfg):
    if args.gen:
        spec = parse_gen_spec(args.gen, args.seed)
    else:
        section = dict(cfg.get("matrix", {}))
        if "kind" not in section:
            raise UsageError("a generator is required: --gen SPEC or [matrix] kind = ...")
        kind = section.pop("kind")
        section.pop("input", None)
        spec = _spec_from(kind, section, args.seed)
    a = generate(spec)
    write_matrix(args.out, a, args.format)
    print(f"wrote {a.shape[0]}x{a.shape[1]} matrix to {args.out}")


def cmd_benchmark(args, cfg):
    exp = cfg.get("experiment", {})
    solver = _solver(args, cfg, k_default=50)
    reg = _regularizer(args, cfg)
    n = int(exp.get("n", 500))
    density = float(exp.get("density", 0.05))
    sigma = float(exp.get("sigma_noise", 0.01))
    classes = []
    for kind in as_list(exp.get("classes", ["low_rank", "noisy_sparse", "ill_conditioned"])):
        extra = {"density": density, "sigma_noise": sigma} if kind == "noisy_sparse" else {}
        classes.append(GeneratorSpec(kind=kind, n=n, k=solver.k, seed=args.seed, **extra))
    return ex.run_benchmark(
        classes,
        solver.k,
        reg,
        solver,
        _seeds(args, exp, 5),
        rsvd_oversample=int(exp.get("oversample", 10)),
        power_iters=int(exp.get("power_iters", 2)),
        cur_oversample=exp.get("cur_oversample"),
    )


def cmd_perturb(args, cfg):
    exp = cfg.get("experiment", {})
    solver = _solver(args, cfg, k_default=20)
    return ex.run_perturbation_study(
        int(exp.get("n", 200)),
        solver.k,
        _floats(exp.get("eps_list", [1e-4, 1e-3, 1e-2])),
        _regularizer(args, cfg),
        solver,
        _seeds(args, exp, 1),
    )


def cmd_ablate(args, cfg):
    exp = cfg.get("experiment", {})
    a, _ = _matrix_source(args, cfg)
    solver = _solver(args, cfg)
    caps = as_list(exp.get("kappa_caps"))
    return ex.run_ablation_beta(
        a,
        solver.k,
        _floats(exp.get("beta_list", DEFAULT_BETAS)),
        _regularizer(args, cfg),
        solver,
        kappa_caps=None if caps is None else [None if c is None else float(c) for c in caps],
    )


def cmd_sweep(args, cfg):
    exp = cfg.get("experiment", {})
    a, _ = _matrix_source(args, cfg)
    solver = _solver(args, cfg)
    return ex.run_sensitivity_sweep(
        a,
        solver.k,
        _floats(exp.get("lambda_grid", DEFAULT_LAMBDAS)),
        _floats(exp.get("alpha_grid", DEFAULT_ALPHAS)),
        solver,
        beta=float(exp.get("beta", 0.0)),
    )


def cmd_stability(args, cfg):
    exp = cfg.get("experiment", {})
    a, _ = _matrix_source(args, cfg)
    solver = _solver(args, cfg)
    seeds = _seeds(args, exp, 10)
    return ex.run_stability(a, solver.k, _regularizer(args, cfg), solver, len(seeds), seeds=seeds)


def cmd_scaling(args, cfg):
    exp = cfg.get("experiment", {})
    solver = _solver(args, cfg, k_default=50)
    return ex.run_runtime_scaling(
        [int(n) for n in as_list(exp.get("n_list", [250, 500, 1000, 2000]))],
        solver.k,
        _regularizer(args, cfg),
        solver,
        baselines_on=bool(exp.get("baselines", True)),
        seed=args.seed,
    )


COMMANDS = {
    "decompose": cmd_decompose,
    "generate": cmd_generate,
    "benchmark": cmd_benchmark,
    "perturb": cmd_perturb,
    "ablate": cmd_ablate,
    "sweep": cmd_sweep,
    "stability": cmd_stability,
    "scaling": cmd_scaling,
}


def _summary(report):
    """One-line JSON of the scalar aggregates."""
    scalars = {k: v for k, v in report.aggregates.items() if not isinstance(v, dict)}
    return json.dumps(json.loads(dumps_report(scalars)), sort_keys=True)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        cfg = load_config(args.config) if args.config else {}
        result = COMMANDS[args.command](args, cfg)
        if result is not None:
            write_report(args.out, result)
            print(f"{result.kind}: {len(result.runs)} runs -> {args.out}")
            print(_summary(result))
        return EXIT_OK
    except (UsageError, ConfigError) as exc:
        print(f"ddecomp {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"ddecomp {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"ddecomp {args.command}: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (IoError, OSError) as exc:
        print(f"ddecomp {args.command}: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"ddecomp {args.command}: invalid argument: {exc}", file=sys.stderr)
        return EXIT_USAGE
