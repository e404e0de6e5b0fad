"""Benchmark harness: repeated-trial solves, parameter sweeps, CSV output.

Every run embeds its full configuration as '#'-prefixed header lines so
any figure can be regenerated from its CSV alone.  Trial seeds derive
from (master_seed, trial_index) through the splittable generator, so
adding trials never changes earlier trials' results.  Wall-clock columns
are informational only; operation counts are the portable metric.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .diagnostics import xi_trend_study, write_trend_csv
from .errors import DimensionError
from .problems import (
    GAUSSIAN,
    GeneratorSpec,
    LinearSystem,
    generate,
    load_system,
    make_consistent_system,
)
from .rng import RngStream, derived_seed
from .solver import STATUS_ITERATION_CAP, RunReport, SolverConfig, solve

RECORD_RR_VS_ITERATION = "rr-vs-iteration"
RECORD_RR_VS_OPS = "rr-vs-ops"
RECORD_RR_VS_TIME = "rr-vs-time"
ALL_RECORDS = frozenset({RECORD_RR_VS_ITERATION, RECORD_RR_VS_OPS, RECORD_RR_VS_TIME})

VARY_BETA = "beta"
VARY_DELTA = "delta"

# The delta sweep mirrors the experimental range, which starts at 5.
DELTA_SWEEP_FLOOR = 5

EXIT_OK = 0
EXIT_IO_ERROR = 2
EXIT_INVALID_SPEC = 3


@dataclass(frozen=True)
class SystemSource:
    """Where the test system comes from: a Matrix Market file or a generator."""

    path: str | None = None
    rhs_path: str | None = None
    generator: GeneratorSpec | None = None

    def __post_init__(self):
        if (self.path is None) == (self.generator is None):
            raise ValueError("exactly one of path or generator must be set")
        if self.rhs_path is not None and self.path is None:
            raise ValueError("rhs_path requires a matrix path")

    def realize(self, master_seed: int, trial: int | None = None) -> LinearSystem:
        """Build the system deterministically.

        The matrix honors the generator spec's own seed; the right-hand
        side's generating solution derives from the master seed.  With
        `trial` set (per-trial system redraw) both derivations also fold
        in the trial index, so adding trials never disturbs earlier ones.
        """
        salt = 0 if trial is None else trial + 1
        if self.path is not None:
            return load_system(
                self.path, self.rhs_path, seed=derived_seed(master_seed, 2, salt)
            )
        spec = self.generator
        matrix_seed = spec.seed if trial is None else derived_seed(spec.seed, salt)
        A = generate(replace(spec, seed=matrix_seed))
        x_star = RngStream(master_seed, key=(1, salt)).generator().standard_normal(spec.n)
        label = f"{spec.kind}-{spec.m}x{spec.n}"
        return make_consistent_system(A, 0, x_star=x_star, label=label)


@dataclass(frozen=True)
class BenchSpec:
    """One benchmark: a system, one or more methods, repeated trials."""

    source: SystemSource
    methods: tuple
    trials: int = 10
    output_path: str = "bench"
    record: frozenset = ALL_RECORDS
    master_seed: int = 0
    redraw_system: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.methods:
            raise ValueError("at least one method is required")
        if not set(self.record) <= ALL_RECORDS:
            raise ValueError(f"unknown record tags {set(self.record) - ALL_RECORDS}")


@dataclass(frozen=True)
class SweepSpec:
    """Vary beta or delta over a grid around a single base method."""

    vary: str
    grid: tuple
    fixed_other: int
    base: BenchSpec

    def __post_init__(self):
        if self.vary not in (VARY_BETA, VARY_DELTA):
            raise ValueError("vary must be 'beta' or 'delta'")
        if not self.grid:
            raise ValueError("grid must be nonempty")
        if len(self.base.methods) != 1:
            raise ValueError("sweep requires exactly one base method")
        if self.fixed_other < 1:
            raise ValueError("fixed_other must be at least 1")


def _config_echo_lines(name: str, cfg: SolverConfig):
    return [
        f"method: name={name} beta={cfg.beta} delta={cfg.delta} rule={cfg.update_rule}"
        f" step_size={cfg.step_size!r} rr_tol={cfg.rr_tolerance!r}"
        f" max_iters={cfg.max_iterations} refresh={cfg.residual_refresh_period}"
        f" inner_tol={cfg.inner.rel_tol!r} inner_cap={cfg.inner.max_inner_iter}"
        f" seed={cfg.seed}"
    ]


def _source_echo(source: SystemSource) -> str:
    if source.path is not None:
        rhs = source.rhs_path or "synthetic"
        return f"system: matrix={source.path} rhs={rhs}"
    g = source.generator
    return (
        f"system: generate kind={g.kind} m={g.m} n={g.n}"
        f" sigma={g.sigma!r} density={g.density!r} seed={g.seed}"
    )


def _trial_report(system: LinearSystem, cfg: SolverConfig, master_seed: int, trial: int) -> RunReport:
    trial_cfg = replace(cfg, seed=derived_seed(master_seed, trial))
    return solve(system, trial_cfg)


def _trial_system(spec: BenchSpec, base_system: LinearSystem, trial: int) -> LinearSystem:
    if not spec.redraw_system:
        return base_system
    return spec.source.realize(spec.master_seed, trial=trial)


def run_bench(spec: BenchSpec, system: LinearSystem | None = None) -> int:
    """Run every method for `trials` independent solves; write CSVs.

    Detail rows: (method, trial, iteration, rr[, cumulative_ops]
    [, elapsed_seconds]) with the optional columns controlled by the
    record set.  Summary rows: per-method arithmetic means over trials.
    Hitting the iteration cap is a valid outcome and still exits 0.
    """
    if system is None:
        system = spec.source.realize(spec.master_seed)

    header = ["rbskm bench", _source_echo(spec.source), f"label: {system.label}"]
    header += [f"trials: {spec.trials}", f"master_seed: {spec.master_seed}"]
    for name, cfg in spec.methods:
        header += _config_echo_lines(name, cfg)

    detail_cols = ["method", "trial", "iteration", "rr"]
    if RECORD_RR_VS_OPS in spec.record:
        detail_cols.append("cumulative_ops")
    if RECORD_RR_VS_TIME in spec.record:
        detail_cols.append("elapsed_seconds")

    detail_rows = []
    summary_rows = []
    for name, cfg in spec.methods:
        iterations, total_ops, wall, cap_hits, statuses = [], [], [], 0, []
        for trial in range(spec.trials):
            trial_system = _trial_system(spec, system, trial)
            report = _trial_report(trial_system, cfg, spec.master_seed, trial)
            iterations.append(report.iterations)
            total_ops.append(report.total_ops)
            wall.append(report.wall_time)
            statuses.append(report.status)
            if report.status == STATUS_ITERATION_CAP:
                cap_hits += 1
            for rec in report.trace:
                row = [name, trial, rec.k, repr(rec.rr_after)]
                if RECORD_RR_VS_OPS in spec.record:
                    row.append(rec.ops_cumulative)
                if RECORD_RR_VS_TIME in spec.record:
                    row.append(repr(rec.elapsed_seconds))
                detail_rows.append(row)
        summary_rows.append(
            [
                name,
                spec.trials,
                repr(float(np.mean(iterations))),
                repr(float(np.mean(total_ops))),
                repr(float(np.mean(wall))),
                cap_hits,
                ";".join(sorted(set(statuses))),
            ]
        )

    _write_csv(f"{spec.output_path}_detail.csv", header, detail_cols, detail_rows)
    _write_csv(
        f"{spec.output_path}_summary.csv",
        header,
        ["method", "trials", "mean_iterations", "mean_total_ops", "mean_wall_time", "cap_hits", "statuses"],
        summary_rows,
    )
    return EXIT_OK


def run_sweep(spec: SweepSpec, system: LinearSystem | None = None) -> int:
    """One summary row per grid value of the varied parameter.

    Grid values violating delta <= beta <= m (or the delta-sweep floor)
    are skipped with a warning row; an empty effective grid exits 3.
    """
    base = spec.base
    if system is None:
        system = base.source.realize(base.master_seed)
    m = system.A.nrows
    name, cfg = base.methods[0]

    header = ["rbskm sweep", _source_echo(base.source), f"label: {system.label}"]
    header += [
        f"vary: {spec.vary}",
        f"fixed_other: {spec.fixed_other}",
        f"trials: {base.trials}",
        f"master_seed: {base.master_seed}",
    ]
    header += _config_echo_lines(name, cfg)

    rows = []
    ran_any = False
    for value in spec.grid:
        value = int(value)
        if spec.vary == VARY_BETA:
            beta, delta = value, spec.fixed_other
            valid = delta <= beta <= m
        else:
            beta, delta = spec.fixed_other, value
            valid = DELTA_SWEEP_FLOOR <= delta <= beta <= m
        if not valid:
            rows.append([value, "", "", "", "skipped-invalid"])
            continue
        point_cfg = replace(cfg, beta=beta, delta=delta)
        iterations, total_ops, wall = [], [], []
        for trial in range(base.trials):
            trial_system = _trial_system(base, system, trial)
            report = _trial_report(trial_system, point_cfg, base.master_seed, trial)
            iterations.append(report.iterations)
            total_ops.append(report.total_ops)
            wall.append(report.wall_time)
        rows.append(
            [
                value,
                repr(float(np.mean(iterations))),
                repr(float(np.mean(total_ops))),
                repr(float(np.mean(wall))),
                "ok",
            ]
        )
        ran_any = True

    if not ran_any:
        return EXIT_INVALID_SPEC
    out = base.output_path
    if not out.endswith(".csv"):
        out += ".csv"
    _write_csv(out, header, ["value", "mean_iterations", "mean_total_ops", "mean_wall_time", "status"], rows)
    return EXIT_OK


def run_xi_trace(
    generator: GeneratorSpec,
    beta_grid,
    delta: int,
    samples: int,
    seed: int,
    output_path: str,
) -> int:
    """Delegate to the trend study and write its CSV."""
    if generator.kind != GAUSSIAN:
        raise ValueError("xi-trace requires a gaussian generator source")
    points = xi_trend_study(
        generator.n, generator.m, generator.sigma, beta_grid, delta, RngStream(seed), samples
    )
    header = [
        "rbskm xi-trace",
        f"system: generate kind={generator.kind} m={generator.m} n={generator.n} sigma={generator.sigma!r}",
        f"delta: {delta}",
        f"samples: {samples}",
        f"master_seed: {seed}",
    ]
    out = output_path if output_path.endswith(".csv") else output_path + ".csv"
    with open(out, "w", encoding="utf-8", newline="") as fh:
        write_trend_csv(points, fh, header_lines=header)
    return EXIT_OK


def _write_csv(path, header_lines, columns, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)
