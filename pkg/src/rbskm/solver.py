"""The randomized block subsampling Kaczmarz-Motzkin outer iteration.

Each step samples beta rows uniformly at random, keeps the delta rows with
the largest absolute subresidual entries, and projects the iterate onto
that block (or applies the pseudoinverse-free weighted row update).  The
iteration starts from x = 0 so the iterates stay in the row space and the
limit is the minimum-norm solution.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .cgls import InnerSolveConfig, InnerSolveStats, cgls_min_norm
from .diagnostics import RB_SKM, OpCountInputs, op_count
from .errors import DimensionError, StalledIteration
from .problems import LinearSystem
from .rng import RngStream
from .sampling import IndexSet, sample_uniform_subset, top_delta
from .sparse import RowBlock, row_gather

BLOCK_PROJECTION = "block-projection"
PSEUDOINVERSE_FREE = "pseudoinverse-free"
UNIFORM_WEIGHTS = "uniform"

STATUS_CONVERGED = "converged"
STATUS_ITERATION_CAP = "iteration-cap"
STATUS_STALLED = "stalled"

DEFAULT_RR_TOL = 1e-6
DEFAULT_MAX_ITERATIONS = 200_000
DEFAULT_REFRESH_PERIOD = 1000

# Full per-step trace is kept only for runs capped at this many iterations;
# longer runs keep every 10th record plus the final one.
FULL_TRACE_LIMIT = 10_000
TRACE_STRIDE = 10

PRESET_NAMES = ("RK", "Motzkin", "RBK", "SKM", "BSKM1", "RB-SKM")


@dataclass(frozen=True)
class SolverConfig:
    """Outer-iteration parameters.

    beta is the sample size, delta the block size kept by the greedy pass;
    1 <= delta <= beta <= m is enforced when the config is bound to a
    system.  The stopping statistic is the squared-norm relative residual
    ||b - A x||^2 / ||b||^2 compared against rr_tolerance.
    """

    beta: int
    delta: int
    update_rule: str = BLOCK_PROJECTION
    pif_weights: str = UNIFORM_WEIGHTS
    step_size: float = 1.0
    rr_tolerance: float = DEFAULT_RR_TOL
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    residual_refresh_period: int = DEFAULT_REFRESH_PERIOD
    inner: InnerSolveConfig = field(default_factory=InnerSolveConfig)
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.delta <= self.beta:
            raise ValueError(f"need 1 <= delta <= beta, got delta={self.delta}, beta={self.beta}")
        if self.update_rule not in (BLOCK_PROJECTION, PSEUDOINVERSE_FREE):
            raise ValueError(f"unknown update rule '{self.update_rule}'")
        if self.pif_weights != UNIFORM_WEIGHTS:
            raise ValueError(f"unsupported weight scheme '{self.pif_weights}'")
        if self.step_size < 0:
            raise ValueError("step_size must be nonnegative")
        if self.rr_tolerance <= 0:
            raise ValueError("rr_tolerance must be positive")
        if self.max_iterations < 1 or self.residual_refresh_period < 1:
            raise ValueError("iteration counts must be at least 1")

    def bind_check(self, m: int):
        if self.beta > m:
            raise ValueError(f"beta={self.beta} exceeds the row count m={m}")


def preset(name: str, m: int, beta: int | None = None, delta: int | None = None, **options) -> SolverConfig:
    """Named parameter specializations of the subsampled block iteration.

    RK fixes (beta, delta) = (1, 1); Motzkin = (m, 1); RBK = (beta, beta);
    SKM = (beta, 1); BSKM1 = (m, delta).  The generic "RB-SKM" requires
    both.  Free parameters left open by a preset must be supplied;
    parameters a preset fixes must not conflict.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    key = name.strip().lower().replace("_", "-")

    def fixed(value, supplied, label):
        if supplied is not None and supplied != value:
            raise ValueError(f"preset '{name}' fixes {label}={value}, got {supplied}")
        return value

    def required(supplied, label):
        if supplied is None:
            raise ValueError(f"preset '{name}' requires {label}")
        return supplied

    if key == "rk":
        b, d = fixed(1, beta, "beta"), fixed(1, delta, "delta")
    elif key == "motzkin":
        b, d = fixed(m, beta, "beta"), fixed(1, delta, "delta")
    elif key == "rbk":
        b = required(beta, "beta")
        d = fixed(b, delta, "delta")
    elif key == "skm":
        b = required(beta, "beta")
        d = fixed(1, delta, "delta")
    elif key == "bskm1":
        d = required(delta, "delta")
        b = fixed(m, beta, "beta")
    elif key in ("rb-skm", "rbskm"):
        b = required(beta, "beta")
        d = required(delta, "delta")
    else:
        raise ValueError(f"unknown preset '{name}'")
    cfg = SolverConfig(beta=b, delta=d, **options)
    cfg.bind_check(m)
    return cfg


@dataclass
class SolverState:
    """Mutable per-solve state: iterate, maintained residual, counters."""

    x: np.ndarray
    r: np.ndarray
    k: int
    ops: int
    rng: RngStream


def init_state(sys: LinearSystem, cfg: SolverConfig) -> SolverState:
    """Fresh state at x = 0 (keeps every iterate in the row space)."""
    return SolverState(
        x=np.zeros(sys.A.ncols),
        r=np.asarray(sys.b, dtype=np.float64).copy(),
        k=0,
        ops=0,
        rng=RngStream(cfg.seed),
    )


@dataclass
class StepRecord:
    """What one outer iteration did."""

    k: int
    tau: IndexSet
    chosen: IndexSet
    inner_stats: InnerSolveStats
    rr_after: float
    ops_this_step: int
    ops_cumulative: int
    elapsed_seconds: float = 0.0


@dataclass
class RunReport:
    """Terminal status plus the (possibly thinned) per-iteration trace."""

    status: str
    iterations: int
    trace: list[StepRecord]
    final_rr: float
    total_ops: int
    wall_time: float  # informational only, never part of acceptance
    config_echo: SolverConfig
    system_label: str
    solution: np.ndarray


def _relative_residual(r: np.ndarray, b: np.ndarray) -> float:
    bb = float(b @ b)
    if bb == 0.0:
        return 0.0
    return float(r @ r) / bb


def _sample_active_subset(m: int, state: SolverState, cfg: SolverConfig):
    """Draw tau until its subresidual is not identically zero.

    Allows ceil(m / beta) resamples past the first draw, then declares the
    iteration stalled: projecting onto already-satisfied rows makes no
    progress.
    """
    attempts = 1 + math.ceil(m / cfg.beta)
    for _ in range(attempts):
        tau = sample_uniform_subset(m, cfg.beta, state.rng)
        sub = np.abs(state.r[tau.indices])
        if sub.any():
            return tau, sub
    raise StalledIteration(
        f"subresidual identically zero on {attempts} consecutive subsets"
    )


def _pif_direction(block: RowBlock, sub_residual: np.ndarray, cfg: SolverConfig):
    """Weighted row-projection direction avoiding the block pseudoinverse.

    d = step_size * sum_i w_i * (r_i / ||a_i||^2) * a_i with uniform
    weights w_i = 1/delta.  Rows with zero norm contribute nothing and are
    flagged through the degenerate bit.
    """
    norms = block.row_norms_sq
    live = norms > 0.0
    coef = np.zeros(block.nrows)
    coef[live] = (cfg.step_size / cfg.delta) * sub_residual[live] / norms[live]
    d = block.rmatvec(coef)
    return d, InnerSolveStats(0, 0.0, degenerate=bool(np.any(~live)))


def step(sys: LinearSystem, state: SolverState, cfg: SolverConfig):
    """One outer iteration; mutates and returns the state with a record.

    Sample tau, select the top-delta rows of |r_tau|, solve the block
    subproblem per cfg.update_rule, update x and r by the recurrence
    r <- r - A d, and recompute r from scratch every
    residual_refresh_period steps.  Raises StalledIteration when every
    resampled subset has a zero subresidual.
    """
    A = sys.A
    m = A.nrows
    cfg.bind_check(m)
    if state.x.shape != (A.ncols,) or state.r.shape != (m,):
        raise DimensionError("state does not match the system dimensions")

    tau, sub = _sample_active_subset(m, state, cfg)
    chosen = top_delta(sub, tau, cfg.delta)
    block = row_gather(A, chosen.indices)
    if cfg.update_rule == BLOCK_PROJECTION:
        d, inner_stats = cgls_min_norm(block, state.r[chosen.indices], cfg.inner)
    else:
        d, inner_stats = _pif_direction(block, state.r[chosen.indices], cfg)

    state.x += d
    state.r -= A.matvec(d)
    state.k += 1
    if state.k % cfg.residual_refresh_period == 0:
        state.r = sys.b - A.matvec(state.x)

    rr = _relative_residual(state.r, sys.b)
    ops = op_count(
        OpCountInputs(m, A.ncols, cfg.beta, cfg.delta, block.nnz, inner_stats.iterations),
        RB_SKM,
    )
    state.ops += ops
    record = StepRecord(state.k, tau, chosen, inner_stats, rr, ops, state.ops)
    return state, record


def pif_step(sys: LinearSystem, state: SolverState, cfg: SolverConfig):
    """`step` restricted to the pseudoinverse-free update rule."""
    if cfg.update_rule != PSEUDOINVERSE_FREE:
        raise ValueError("pif_step requires update_rule='pseudoinverse-free'")
    return step(sys, state, cfg)


def solve(sys: LinearSystem, cfg: SolverConfig) -> RunReport:
    """Iterate until RR = ||b - A x||^2 / ||b||^2 < rr_tolerance or the cap.

    RR uses squared norms and is evaluated from the maintained residual.
    b = 0 returns immediately converged with x = 0.
    """
    cfg.bind_check(sys.A.nrows)
    t0 = time.perf_counter()
    state = init_state(sys, cfg)
    if float(state.r @ state.r) == 0.0:
        return RunReport(
            STATUS_CONVERGED, 0, [], 0.0, 0, time.perf_counter() - t0, cfg, sys.label, state.x
        )

    keep_all = cfg.max_iterations <= FULL_TRACE_LIMIT
    trace: list[StepRecord] = []
    status = STATUS_ITERATION_CAP
    record = None
    while state.k < cfg.max_iterations:
        try:
            state, record = step(sys, state, cfg)
        except StalledIteration:
            status = STATUS_STALLED
            break
        record.elapsed_seconds = time.perf_counter() - t0
        if keep_all or state.k % TRACE_STRIDE == 0:
            trace.append(record)
        if record.rr_after < cfg.rr_tolerance:
            status = STATUS_CONVERGED
            break
    if record is not None and (not trace or trace[-1] is not record):
        trace.append(record)

    final_rr = _relative_residual(state.r, sys.b)
    return RunReport(
        status,
        state.k,
        trace,
        final_rr,
        state.ops,
        time.perf_counter() - t0,
        cfg,
        sys.label,
        state.x,
    )
