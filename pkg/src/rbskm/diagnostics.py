"""Convergence diagnostics.

Everything the theory quantifies: the selection ratio (xi) behind the
contraction factor, the assembled per-iteration rate bound, eigenvalue
interlacing checks, dense reference solutions, the per-iteration
operation-count model, and the xi-versus-beta trend study.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import CapabilityError, XiUndefinedError
from .problems import LinearSystem, gaussian_matrix
from .rng import RngStream
from .sampling import sample_uniform_subset, top_delta
from .sparse import SpectrumEstimate, row_gather

# Enumerate all C(m, beta) subsets only up to this count; Monte Carlo above.
EXHAUSTIVE_SUBSET_LIMIT = 100_000
DEFAULT_XI_SAMPLES = 1000
DENSE_ORACLE_LIMIT = 2000

MODE_EXHAUSTIVE = "exhaustive"
MODE_MONTE_CARLO = "monte-carlo"

RB_SKM = "rb-skm"
FULL_SCAN_GREEDY = "full-scan-greedy"

SOURCE_SAMPLED = "sampled"
SOURCE_FULL_MATRIX = "full-matrix"


@dataclass(frozen=True)
class XiEstimate:
    """Ratio of total subset residual energy to total delta-th-largest
    squared-entry energy over size-beta subsets.  At least delta whenever
    the denominator is positive."""

    value: float
    num_subsets: int
    mode: str
    std_error: float | None = None

    def __post_init__(self):
        if self.value < 1.0 - 1e-9:
            raise ValueError(f"xi must be at least 1, got {self.value}")


@dataclass(frozen=True)
class RateBound:
    """Assembled per-iteration expected contraction factor (< 1)."""

    rho: float
    lambda_min_plus: float
    lambda_max_block: float
    xi: XiEstimate
    beta: int
    delta: int
    m: int
    lambda_max_source: str

    def __post_init__(self):
        if self.lambda_min_plus <= 0 or self.lambda_max_block <= 0:
            raise ValueError("eigenvalue inputs must be positive")


@dataclass(frozen=True)
class OpCountInputs:
    """Per-iteration quantities entering the operation-count model."""

    m: int
    n: int
    beta: int
    delta: int
    nnz_block: int
    it1: int

    def __post_init__(self):
        if min(self.m, self.n, self.beta, self.delta, self.nnz_block, self.it1) < 0:
            raise ValueError("op-count inputs must be nonnegative")


def op_count(inp: OpCountInputs, method: str = RB_SKM) -> int:
    """Operations per outer iteration under dense-residual accounting.

    The subsampled method scans 2*beta entries to select its block; the
    full-scan greedy baseline scans 2*m.  Everything else is shared:
    residual update, selection bookkeeping, and the inner least-squares
    iterations (it1 passes over the block).
    """
    if method == RB_SKM:
        scan = 2 * inp.beta
    elif method == FULL_SCAN_GREEDY:
        scan = 2 * inp.m
    else:
        raise ValueError(f"unknown op-count method '{method}'")
    return (
        2 * inp.m * inp.n
        + inp.n
        + scan
        + (2 * inp.nnz_block + 3 * inp.n + 2 * inp.delta) * inp.it1
        + 2 * inp.n * inp.delta
    )


def _kth_largest_sq(sub_sq: np.ndarray, delta: int) -> float:
    """delta-th largest entry of the squared subresidual: equals the
    minimum over the selected top-delta entries without forming them."""
    return float(np.partition(sub_sq, sub_sq.size - delta)[sub_sq.size - delta])


def _xi_exhaustive(r_sq: np.ndarray, beta: int, delta: int):
    """Both sums over all C(m, beta) subsets, exactly rounded.

    Per-subset terms are combined with math.fsum so the result is the
    correctly rounded value of the defining ratio; any correct enumeration
    reproduces it bit-for-bit.
    """
    m = r_sq.size
    numerators = []
    denominators = []
    for combo in itertools.combinations(range(m), beta):
        sub = r_sq[list(combo)]
        numerators.append(math.fsum(sub))
        denominators.append(_kth_largest_sq(sub, delta))
    denominator = math.fsum(denominators)
    if denominator == 0.0:
        raise XiUndefinedError("the selected subresidual entry is zero on every subset")
    return math.fsum(numerators) / denominator


def estimate_xi(
    sys: LinearSystem,
    x,
    beta: int,
    delta: int,
    num_samples: int = DEFAULT_XI_SAMPLES,
    rng: RngStream | None = None,
    mode: str | None = None,
) -> XiEstimate:
    """Estimate the selection ratio at the state x.

    Exhaustive over all C(m, beta) subsets when that count is at most
    EXHAUSTIVE_SUBSET_LIMIT, Monte Carlo over `num_samples` uniform
    subsets otherwise (standard error via the delta method for the ratio
    estimator).  `mode` forces "exhaustive" or "monte-carlo".
    """
    A = sys.A
    m = A.nrows
    if not 1 <= delta <= beta <= m:
        raise ValueError(f"need 1 <= delta <= beta <= {m}")
    r = sys.b - A.matvec(np.asarray(x, dtype=np.float64))
    r_sq = r * r
    if not r_sq.any():
        raise XiUndefinedError("residual is identically zero at this state")

    total = math.comb(m, beta)
    if mode is None:
        mode = MODE_EXHAUSTIVE if total <= EXHAUSTIVE_SUBSET_LIMIT else MODE_MONTE_CARLO
    if mode == MODE_EXHAUSTIVE:
        if total > EXHAUSTIVE_SUBSET_LIMIT:
            raise CapabilityError(
                f"C({m},{beta}) = {total} subsets exceeds the exhaustive limit"
            )
        estimate = XiEstimate(_xi_exhaustive(r_sq, beta, delta), total, MODE_EXHAUSTIVE)
    elif mode == MODE_MONTE_CARLO:
        if num_samples < 1:
            raise ValueError("num_samples must be positive")
        rng = rng if rng is not None else RngStream(0)
        nums = np.empty(num_samples)
        dens = np.empty(num_samples)
        for t in range(num_samples):
            tau = sample_uniform_subset(m, beta, rng)
            sub = r_sq[tau.indices]
            nums[t] = sub.sum()
            dens[t] = _kth_largest_sq(sub, delta)
        den_total = float(dens.sum())
        if den_total == 0.0:
            raise XiUndefinedError("the selected subresidual entry was zero on every sampled subset")
        value = float(nums.sum()) / den_total
        std_error = None
        if num_samples > 1:
            resid = nums - value * dens
            std_error = float(np.std(resid, ddof=1) / (dens.mean() * math.sqrt(num_samples)))
        estimate = XiEstimate(value, num_samples, MODE_MONTE_CARLO, std_error)
    else:
        raise ValueError(f"unknown xi mode '{mode}'")

    # lower bound delta holds per subset, so it survives both estimators
    assert estimate.value >= delta * (1.0 - 1e-12), "xi fell below its lower bound"
    return estimate


def rate_bound(
    sys: LinearSystem,
    x,
    cfg,
    spectrum: SpectrumEstimate,
    block_sample_count: int = 0,
    rng: RngStream | None = None,
    xi_samples: int = DEFAULT_XI_SAMPLES,
) -> RateBound:
    """Per-iteration contraction factor rho at the state x.

    rho = 1 - (delta/xi) * (beta/m) * (lambda_min_plus / lambda_max_block).
    With block_sample_count > 0 the block Gram spectral norm is the
    maximum over that many sampled (tau, selection) realizations;
    otherwise the full-matrix lambda_max is used, which dominates every
    block by interlacing and keeps the bound guaranteed.
    """
    if spectrum.lambda_min_plus is None:
        raise ValueError("spectrum estimate lacks lambda_min_plus")
    rng = rng if rng is not None else RngStream(0)
    xi = estimate_xi(sys, x, cfg.beta, cfg.delta, xi_samples, rng.child(0))

    A = sys.A
    m = A.nrows
    if block_sample_count > 0:
        r = sys.b - A.matvec(np.asarray(x, dtype=np.float64))
        block_rng = rng.child(1)
        lam_block = 0.0
        for _ in range(block_sample_count):
            tau = sample_uniform_subset(m, cfg.beta, block_rng)
            chosen = top_delta(np.abs(r[tau.indices]), tau, cfg.delta)
            dense = row_gather(A, chosen.indices).toarray()
            lam = float(np.linalg.eigvalsh(dense @ dense.T)[-1])
            lam_block = max(lam_block, lam)
        source = SOURCE_SAMPLED
    else:
        lam_block = spectrum.lambda_max
        source = SOURCE_FULL_MATRIX

    rho = 1.0 - (cfg.delta / xi.value) * (cfg.beta / m) * (spectrum.lambda_min_plus / lam_block)
    return RateBound(rho, spectrum.lambda_min_plus, lam_block, xi, cfg.beta, cfg.delta, m, source)


def interlacing_check(S, principal_rows, tol: float = 1e-9) -> bool:
    """Whether the eigenvalues of the principal submatrix interlace those
    of the symmetric matrix S, within `tol` absolute."""
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError("S must be square")
    scale = max(1.0, float(np.abs(S).max()))
    if np.abs(S - S.T).max() > 1e-12 * scale:
        raise ValueError("S must be symmetric")
    rows = np.asarray(principal_rows, dtype=np.int64)
    if rows.size == 0 or np.unique(rows).size != rows.size:
        raise ValueError("principal rows must be nonempty and distinct")
    if rows.min() < 0 or rows.max() >= S.shape[0]:
        raise ValueError("principal row index out of range")

    n = S.shape[0]
    t = rows.size
    full = np.linalg.eigvalsh(S)[::-1]          # nonincreasing
    sub = np.linalg.eigvalsh(S[np.ix_(rows, rows)])[::-1]
    for i in range(t):
        if not (full[n - t + i] - tol <= sub[i] <= full[i] + tol):
            return False
    return True


def reference_solution(sys: LinearSystem, dense_limit: int = DENSE_ORACLE_LIMIT) -> np.ndarray:
    """Dense minimum-norm least-squares solution, for error curves and tests."""
    m, n = sys.A.nrows, sys.A.ncols
    if min(m, n) > dense_limit:
        raise CapabilityError(
            f"min(m, n) = {min(m, n)} exceeds the dense-oracle limit {dense_limit}"
        )
    if m * n > 200_000_000:
        raise CapabilityError("dense reference would need too much memory")
    solution, *_ = np.linalg.lstsq(sys.A.toarray(), sys.b, rcond=None)
    return solution


@dataclass(frozen=True)
class TrendPoint:
    beta: int
    xi: float
    std_error: float | None
    mode: str


def xi_trend_study(
    n: int,
    m: int,
    sigma: float,
    beta_grid,
    delta: int,
    rng: RngStream,
    num_samples: int = DEFAULT_XI_SAMPLES,
) -> list[TrendPoint]:
    """xi estimates across a beta grid on one Gaussian instance.

    Uses the homogeneous setup (b = 0, random state x) so the residual is
    the matrix applied to a fixed Gaussian vector, the regime where the
    (beta-delta)/log(beta-delta) growth is conjectured.  Deterministic for
    a fixed stream; every grid point draws from its own pre-split
    substream.
    """
    grid = [int(b) for b in beta_grid]
    if not grid:
        raise ValueError("beta grid must be nonempty")
    for b in grid:
        if not delta < b <= m:
            raise ValueError(f"grid value {b} outside (delta, m] = ({delta}, {m}]")
    A = gaussian_matrix(m, n, sigma, rng.child(0).generator())
    sys = LinearSystem(A, np.zeros(m), np.zeros(n), label=f"gaussian-{m}x{n}")
    x = rng.child(1).generator().standard_normal(n)
    points = []
    for j, b in enumerate(grid):
        est = estimate_xi(sys, x, b, delta, num_samples, rng.child(2 + j))
        points.append(TrendPoint(b, est.value, est.std_error, est.mode))
    return points


def write_trend_csv(points, target, header_lines=()) -> None:
    """Serialize trend rows as CSV (beta, xi, std_error, mode)."""
    own = not hasattr(target, "write")
    fh = open(target, "w", encoding="utf-8", newline="") if own else target
    try:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["beta", "xi", "std_error", "mode"])
        for p in points:
            writer.writerow([p.beta, repr(p.xi), "" if p.std_error is None else repr(p.std_error), p.mode])
    finally:
        if own:
            fh.close()
