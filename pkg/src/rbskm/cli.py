"""Command-line interface.

Subcommands: solve, bench, sweep, xi-trace, spectrum.  Systems come from
--matrix <path> (optionally --rhs <path>) or --generate kind=...,m=...,
n=...,[sigma=...|density=...]; methods from repeatable --method flags
'name[,beta=B,delta=D,rule=...,alpha=...]'.  Flags may also be supplied
through a key=value config file via --config; command-line values win.

Exit codes: 0 success (iteration-cap hits included), 2 I/O error,
3 invalid specification.
"""

from __future__ import annotations

import argparse
import csv
import sys

from .bench import (
    ALL_RECORDS,
    EXIT_INVALID_SPEC,
    EXIT_IO_ERROR,
    EXIT_OK,
    BenchSpec,
    SweepSpec,
    SystemSource,
    run_bench,
    run_sweep,
    run_xi_trace,
)
from .errors import MatrixMarketError, RbskmError
from .problems import GeneratorSpec
from .solver import SolverConfig, preset, solve
from .sparse import estimate_spectrum
from .cgls import InnerSolveConfig


def _parse_kv(text: str, flag: str) -> dict:
    out = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ValueError(f"{flag}: expected key=value, got '{part}'")
        key, value = part.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _parse_generate(text: str) -> GeneratorSpec:
    kv = _parse_kv(text, "--generate")
    try:
        kind = kv.pop("kind")
        m = int(kv.pop("m"))
        n = int(kv.pop("n"))
    except KeyError as missing:
        raise ValueError(f"--generate requires kind, m, n (missing {missing})") from None
    sigma = float(kv.pop("sigma", 1.0))
    density = kv.pop("density", None)
    seed = int(kv.pop("seed", 0))
    if kv:
        raise ValueError(f"--generate: unknown keys {sorted(kv)}")
    return GeneratorSpec(
        kind=kind, m=m, n=n, sigma=sigma,
        density=None if density is None else float(density), seed=seed,
    )


def _parse_method(text: str, m: int, args) -> tuple[str, SolverConfig]:
    head, _, rest = text.partition(",")
    name = head.strip()
    if not name:
        raise ValueError("--method requires a method name")
    kv = _parse_kv(rest, "--method") if rest else {}
    beta = int(kv.pop("beta")) if "beta" in kv else None
    delta = int(kv.pop("delta")) if "delta" in kv else None
    options = {
        "rr_tolerance": args.rr_tol,
        "max_iterations": args.max_iters,
        "seed": args.seed,
    }
    if "rule" in kv:
        options["update_rule"] = kv.pop("rule")
    if "alpha" in kv:
        options["step_size"] = float(kv.pop("alpha"))
    inner_kw = {}
    if "inner-tol" in kv:
        inner_kw["rel_tol"] = float(kv.pop("inner-tol"))
    if "inner-cap" in kv:
        inner_kw["max_inner_iter"] = int(kv.pop("inner-cap"))
    if inner_kw:
        options["inner"] = InnerSolveConfig(**inner_kw)
    if kv:
        raise ValueError(f"--method: unknown keys {sorted(kv)}")
    return name, preset(name, m, beta=beta, delta=delta, **options)


def _load_config_file(path: str) -> dict[str, list[str]]:
    values: dict[str, list[str]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{line_no}: expected key = value")
            key, value = line.split("=", 1)
            values.setdefault(key.strip(), []).append(value.strip())
    return values


_CONFIG_KEYS = {
    "matrix": ("matrix", str, False),
    "rhs": ("rhs", str, False),
    "generate": ("generate", str, False),
    "method": ("method", str, True),
    "trials": ("trials", int, False),
    "seed": ("seed", int, False),
    "rr-tol": ("rr_tol", float, False),
    "max-iters": ("max_iters", int, False),
    "out": ("out", str, False),
    "vary": ("vary", str, False),
    "grid": ("grid", str, False),
    "beta-grid": ("beta_grid", str, False),
    "delta": ("delta", int, False),
    "samples": ("samples", int, False),
    "record": ("record", str, False),
    "redraw-system": ("redraw_system", lambda s: s.lower() in ("1", "true", "yes"), False),
    "tol": ("tol", float, False),
    "iters": ("iters", int, False),
}


def _apply_config(args: argparse.Namespace):
    if not getattr(args, "config", None):
        return
    file_values = _load_config_file(args.config)
    for key, raw_list in file_values.items():
        if key not in _CONFIG_KEYS:
            raise ValueError(f"config file: unknown key '{key}'")
        attr, cast, repeatable = _CONFIG_KEYS[key]
        if not hasattr(args, attr) or getattr(args, attr) is not None:
            continue  # flag not used by this subcommand, or given on the command line
        if repeatable:
            setattr(args, attr, [cast(v) for v in raw_list])
        else:
            setattr(args, attr, cast(raw_list[-1]))


def _fill_defaults(args: argparse.Namespace):
    defaults = {
        "trials": 10,
        "seed": 0,
        "rr_tol": 1e-6,
        "max_iters": 200_000,
        "out": "rbskm-out",
        "samples": 1000,
        "redraw_system": False,
        "tol": 1e-10,
        "iters": 5000,
    }
    for attr, value in defaults.items():
        if hasattr(args, attr) and getattr(args, attr) is None:
            setattr(args, attr, value)


def _system_source(args) -> SystemSource:
    if (args.matrix is None) == (getattr(args, "generate", None) is None):
        raise ValueError("exactly one of --matrix or --generate is required")
    if args.matrix is not None:
        return SystemSource(path=args.matrix, rhs_path=getattr(args, "rhs", None))
    return SystemSource(generator=_parse_generate(args.generate))


def _add_common(p: argparse.ArgumentParser, methods=True):
    p.add_argument("--matrix", default=None, help="Matrix Market file with the coefficient matrix")
    p.add_argument("--rhs", default=None, help="Matrix Market file with the right-hand side (else synthesized)")
    p.add_argument("--generate", default=None, help="kind=...,m=...,n=...[,sigma=...][,density=...][,seed=...]")
    if methods:
        p.add_argument("--method", action="append", default=None,
                       help="name[,beta=B,delta=D,rule=...,alpha=...]; repeatable")
    p.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    p.add_argument("--rr-tol", dest="rr_tol", type=float, default=None, help="relative-residual tolerance (default 1e-6)")
    p.add_argument("--max-iters", dest="max_iters", type=int, default=None, help="iteration cap (default 200000)")
    p.add_argument("--out", default=None, help="output path / prefix for CSV files")
    p.add_argument("--config", default=None, help="key=value config file; command-line flags win")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rbskm", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="single solve, print a report")
    _add_common(p_solve)

    p_bench = sub.add_parser("bench", help="repeated-trial method comparison")
    _add_common(p_bench)
    p_bench.add_argument("--trials", type=int, default=None, help="trials per method (default 10)")
    p_bench.add_argument("--record", default=None,
                         help="comma list of rr-vs-iteration, rr-vs-ops, rr-vs-time (default all)")
    p_bench.add_argument("--redraw-system", dest="redraw_system", action="store_const", const=True,
                         default=None, help="redraw the synthetic system each trial")

    p_sweep = sub.add_parser("sweep", help="vary beta or delta over a grid")
    _add_common(p_sweep)
    p_sweep.add_argument("--trials", type=int, default=None)
    p_sweep.add_argument("--vary", choices=["beta", "delta"], default=None, required=False)
    p_sweep.add_argument("--grid", default=None, help="comma-separated integer grid")
    p_sweep.add_argument("--redraw-system", dest="redraw_system", action="store_const", const=True, default=None)

    p_xi = sub.add_parser("xi-trace", help="xi versus beta on a gaussian instance")
    _add_common(p_xi, methods=False)
    p_xi.add_argument("--beta-grid", dest="beta_grid", default=None, help="comma-separated beta grid")
    p_xi.add_argument("--delta", type=int, default=None)
    p_xi.add_argument("--samples", type=int, default=None, help="Monte Carlo subsets per point (default 1000)")

    p_spec = sub.add_parser("spectrum", help="extremal eigenvalue estimates of A.T A")
    _add_common(p_spec, methods=False)
    p_spec.add_argument("--tol", type=float, default=None, help="power-iteration tolerance (default 1e-10)")
    p_spec.add_argument("--iters", type=int, default=None, help="power-iteration cap (default 5000)")

    return parser


def _cmd_solve(args) -> int:
    source = _system_source(args)
    system = source.realize(args.seed)
    if not args.method or len(args.method) != 1:
        raise ValueError("solve requires exactly one --method")
    name, cfg = _parse_method(args.method[0], system.A.nrows, args)
    report = solve(system, cfg)
    print(f"system: {system.label} ({system.A.nrows}x{system.A.ncols}, nnz={system.A.nnz})")
    print(f"method: {name} (beta={cfg.beta}, delta={cfg.delta}, rule={cfg.update_rule})")
    print(f"status: {report.status}")
    print(f"iterations: {report.iterations}")
    print(f"final_rr: {report.final_rr:.6e}")
    print(f"total_ops: {report.total_ops}")
    print(f"wall_time_s: {report.wall_time:.3f}")
    if args.out:
        out = args.out if args.out.endswith(".csv") else args.out + ".csv"
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(f"# rbskm solve\n# label: {system.label}\n")
            fh.write(f"# method: name={name} beta={cfg.beta} delta={cfg.delta} rule={cfg.update_rule}"
                     f" rr_tol={cfg.rr_tolerance!r} max_iters={cfg.max_iterations} seed={cfg.seed}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["iteration", "rr", "cumulative_ops", "elapsed_seconds"])
            for rec in report.trace:
                writer.writerow([rec.k, repr(rec.rr_after), rec.ops_cumulative, repr(rec.elapsed_seconds)])
    return EXIT_OK


def _cmd_bench(args) -> int:
    source = _system_source(args)
    system = source.realize(args.seed)
    if not args.method:
        raise ValueError("bench requires at least one --method")
    methods = tuple(_parse_method(m, system.A.nrows, args) for m in args.method)
    record = ALL_RECORDS if args.record is None else frozenset(
        t.strip() for t in args.record.split(",") if t.strip()
    )
    spec = BenchSpec(
        source=source,
        methods=methods,
        trials=args.trials,
        output_path=args.out,
        record=record,
        master_seed=args.seed,
        redraw_system=args.redraw_system,
    )
    return run_bench(spec, system=system)


def _cmd_sweep(args) -> int:
    source = _system_source(args)
    system = source.realize(args.seed)
    if not args.method or len(args.method) != 1:
        raise ValueError("sweep requires exactly one --method")
    if args.vary is None or args.grid is None:
        raise ValueError("sweep requires --vary and --grid")
    name, cfg = _parse_method(args.method[0], system.A.nrows, args)
    grid = tuple(int(v) for v in args.grid.split(",") if v.strip())
    fixed_other = cfg.delta if args.vary == "beta" else cfg.beta
    base = BenchSpec(
        source=source,
        methods=((name, cfg),),
        trials=args.trials,
        output_path=args.out,
        master_seed=args.seed,
        redraw_system=args.redraw_system,
    )
    spec = SweepSpec(vary=args.vary, grid=grid, fixed_other=fixed_other, base=base)
    return run_sweep(spec, system=system)


def _cmd_xi_trace(args) -> int:
    if args.generate is None:
        raise ValueError("xi-trace requires --generate with kind=gaussian")
    generator = _parse_generate(args.generate)
    if args.beta_grid is None or args.delta is None:
        raise ValueError("xi-trace requires --beta-grid and --delta")
    grid = [int(v) for v in args.beta_grid.split(",") if v.strip()]
    return run_xi_trace(generator, grid, args.delta, args.samples, args.seed, args.out)


def _cmd_spectrum(args) -> int:
    source = _system_source(args)
    system = source.realize(args.seed)
    est = estimate_spectrum(system.A, tol=args.tol, max_iter=args.iters, seed=args.seed)
    print(f"system: {system.label} ({system.A.nrows}x{system.A.ncols}, nnz={system.A.nnz})")
    print(f"lambda_max: {est.lambda_max!r}")
    print(f"lambda_min_plus: {est.lambda_min_plus!r}")
    print(f"method: {est.method}")
    print(f"iterations_used: {est.iterations_used}")
    if args.out:
        out = args.out if args.out.endswith(".csv") else args.out + ".csv"
        with open(out, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["lambda_max", "lambda_min_plus", "method", "iterations_used", "tolerance"])
            writer.writerow([
                repr(est.lambda_max),
                "" if est.lambda_min_plus is None else repr(est.lambda_min_plus),
                est.method,
                est.iterations_used,
                repr(est.tolerance),
            ])
    return EXIT_OK


_COMMANDS = {
    "solve": _cmd_solve,
    "bench": _cmd_bench,
    "sweep": _cmd_sweep,
    "xi-trace": _cmd_xi_trace,
    "spectrum": _cmd_spectrum,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
        _fill_defaults(args)
        return _COMMANDS[args.command](args)
    except (OSError, MatrixMarketError) as exc:
        print(f"rbskm: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO_ERROR
    except (ValueError, RbskmError) as exc:
        print(f"rbskm: invalid specification: {exc}", file=sys.stderr)
        return EXIT_INVALID_SPEC


if __name__ == "__main__":
    raise SystemExit(main())
