"""Test problems: synthetic generators and dataset loading."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateMatrixError, DimensionError
from .matrixmarket import load_matrix_market
from .rng import RngStream
from .sparse import SparseMatrix

GAUSSIAN = "gaussian"
SPARSE_RANDOM = "sparse-random"

# A stored solution must reproduce b to this relative accuracy.
CONSISTENCY_RTOL = 1e-10


@dataclass(frozen=True)
class LinearSystem:
    """A matrix with right-hand side and optional known generating solution."""

    A: SparseMatrix
    b: np.ndarray
    x_star: np.ndarray | None = None
    label: str = ""

    def __post_init__(self):
        b = np.asarray(self.b, dtype=np.float64)
        object.__setattr__(self, "b", b)
        if b.shape != (self.A.nrows,):
            raise DimensionError(f"b must have length {self.A.nrows}, got {b.shape}")
        if self.x_star is not None:
            xs = np.asarray(self.x_star, dtype=np.float64)
            object.__setattr__(self, "x_star", xs)
            if xs.shape != (self.A.ncols,):
                raise DimensionError(f"x_star must have length {self.A.ncols}, got {xs.shape}")
            gap = np.linalg.norm(b - self.A.matvec(xs))
            if gap > CONSISTENCY_RTOL * (1.0 + np.linalg.norm(b)):
                raise ValueError("stored solution does not reproduce b")


@dataclass(frozen=True)
class GeneratorSpec:
    """Parameters for a synthetic overdetermined test matrix."""

    kind: str
    m: int
    n: int
    sigma: float = 1.0
    density: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in (GAUSSIAN, SPARSE_RANDOM):
            raise ValueError(f"unknown generator kind '{self.kind}'")
        if not 1 <= self.n <= self.m:
            raise ValueError("need m >= n >= 1")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.kind == SPARSE_RANDOM:
            if self.density is None or not 0 < self.density <= 1:
                raise ValueError("density must lie in (0, 1]")


def gaussian_matrix(m: int, n: int, sigma: float, gen: np.random.Generator) -> SparseMatrix:
    """Dense-pattern matrix with i.i.d. N(0, sigma^2) entries."""
    return SparseMatrix.from_dense(gen.normal(0.0, sigma, size=(m, n)), prune_zeros=False)


def sparse_random_matrix(m: int, n: int, density: float, gen: np.random.Generator) -> SparseMatrix:
    """Each entry independently nonzero with probability `density`;
    nonzeros are i.i.d. standard normal."""
    mask = gen.random((m, n)) < density
    rows, cols = np.nonzero(mask)
    vals = gen.standard_normal(rows.size)
    return SparseMatrix.from_coo(m, n, rows, cols, vals)


def generate(spec: GeneratorSpec) -> SparseMatrix:
    """Deterministically build the matrix described by `spec`."""
    gen = RngStream(spec.seed).generator()
    if spec.kind == GAUSSIAN:
        return gaussian_matrix(spec.m, spec.n, spec.sigma, gen)
    return sparse_random_matrix(spec.m, spec.n, spec.density, gen)


def make_consistent_system(A: SparseMatrix, seed: int, x_star=None, label: str = "") -> LinearSystem:
    """System with b = A @ x_star; x_star defaults to seeded standard normal."""
    if A.nnz == 0 or not np.any(A.values):
        raise DegenerateMatrixError("cannot build a system on an all-zero matrix")
    if x_star is None:
        x_star = RngStream(seed).generator().standard_normal(A.ncols)
    x_star = np.asarray(x_star, dtype=np.float64)
    return LinearSystem(A, A.matvec(x_star), x_star, label)


def load_system(matrix_path, rhs_path=None, seed: int = 0, label: str | None = None) -> LinearSystem:
    """Load a Matrix Market matrix with its native right-hand side, or
    synthesize a consistent one when no rhs file is given.

    The label records which choice was made so every report carries it.
    """
    A = load_matrix_market(matrix_path)
    name = label or Path(str(matrix_path)).stem
    if rhs_path is not None:
        B = load_matrix_market(rhs_path)
        if B.ncols != 1 or B.nrows != A.nrows:
            raise DimensionError(
                f"rhs must be {A.nrows}x1, got {B.nrows}x{B.ncols}"
            )
        return LinearSystem(A, B.toarray().ravel(), None, f"{name}[native-b]")
    system = make_consistent_system(A, seed, label=f"{name}[synthetic-b]")
    return system
