"""Iterative least-squares solver for the small row-block subproblems."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .sparse import RowBlock

DEFAULT_INNER_TOL = 1e-8

# Slack past the Krylov finite-termination bound min(rows, cols).
_EXTRA_ITERS = 10


@dataclass(frozen=True)
class InnerSolveConfig:
    rel_tol: float = DEFAULT_INNER_TOL
    max_inner_iter: int | None = None  # default min(rows, cols) + 10, bound per block

    def __post_init__(self):
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be positive")
        if self.max_inner_iter is not None and self.max_inner_iter < 1:
            raise ValueError("max_inner_iter must be at least 1")


@dataclass(frozen=True)
class InnerSolveStats:
    iterations: int
    final_relative_residual: float
    degenerate: bool = False


def cgls_min_norm(block: RowBlock, rhs, cfg: InnerSolveConfig | None = None):
    """Minimum-norm least-squares solution of ``block @ d ~= rhs``.

    Conjugate gradient on the normal equations, started from the zero
    vector so every iterate (and hence the limit) lies in the row space of
    the block; that is what makes the limit the minimum-norm solution.
    Stops when ``norm(B.T @ (rhs - B @ d)) <= rel_tol * norm(B.T @ rhs)``
    or at the iteration cap.

    A block with no usable rows (all-zero, or rhs orthogonal to the row
    space) returns d = 0 with the degenerate flag set: the projection is
    vacuous.

    Returns (d, InnerSolveStats).
    """
    if cfg is None:
        cfg = InnerSolveConfig()
    if block.nrows == 0:
        raise ValueError("block must be nonempty")
    rhs = np.asarray(rhs, dtype=np.float64)
    if rhs.shape != (block.nrows,):
        raise DimensionError(f"rhs must have length {block.nrows}, got {rhs.shape}")
    cap = cfg.max_inner_iter or (min(block.nrows, block.ncols) + _EXTRA_ITERS)

    d = np.zeros(block.ncols)
    s = block.rmatvec(rhs)
    s0 = float(np.linalg.norm(s))
    if s0 == 0.0:
        return d, InnerSolveStats(0, 0.0, degenerate=True)

    r = rhs.copy()
    p = s.copy()
    gamma = float(s @ s)
    rel = 1.0
    its = 0
    for its in range(1, cap + 1):
        q = block.matvec(p)
        qq = float(q @ q)
        if qq == 0.0:
            # search direction annihilated; cannot happen in exact arithmetic
            its -= 1
            break
        alpha = gamma / qq
        d += alpha * p
        r -= alpha * q
        s = block.rmatvec(r)
        gamma_new = float(s @ s)
        rel = math.sqrt(gamma_new) / s0
        if rel <= cfg.rel_tol:
            break
        p = s + (gamma_new / gamma) * p
        gamma = gamma_new
    return d, InnerSolveStats(its, rel)
