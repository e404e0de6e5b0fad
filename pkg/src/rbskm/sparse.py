"""Row-compressed sparse matrices, row blocks, and spectrum estimation.

Dense vectors throughout the package are plain one-dimensional float64
numpy arrays; no wrapper type is used.  Matrices are stored row-major
(CSR) because every algorithmic access is a row slice, and the squared
Euclidean norm of each row is cached at construction since the row-action
updates divide by it on every step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMatrixError, DimensionError
from .rng import RngStream

# Dense-exact eigensolve is allowed only up to this min(m, n); above it the
# smallest positive eigenvalue is not computed (it is a diagnostic, never on
# the solve path).
DENSE_EXACT_THRESHOLD = 2000

# Eigenvalues below this fraction of lambda_max count as numerically zero.
RANK_CUTOFF_RTOL = 1e-12


def _row_segment_sums(values: np.ndarray, row_ptr: np.ndarray) -> np.ndarray:
    """Per-row sums of `values` laid out by CSR offsets `row_ptr`."""
    starts = row_ptr[:-1]
    if starts.size == 0:
        return np.zeros(0)
    padded = np.append(values, 0.0)
    sums = np.add.reduceat(padded, starts)
    sums[np.diff(row_ptr) == 0] = 0.0
    return sums


def _concat_ranges(starts: np.ndarray, stops: np.ndarray) -> np.ndarray:
    """Flat indices concatenating the half-open ranges [starts_i, stops_i)."""
    lens = stops - starts
    keep = lens > 0
    starts, stops, lens = starts[keep], stops[keep], lens[keep]
    total = int(lens.sum())
    if total == 0:
        return np.zeros(0, dtype=np.int64)
    out = np.ones(total, dtype=np.int64)
    out[0] = starts[0]
    bounds = np.cumsum(lens)[:-1]
    out[bounds] = starts[1:] - stops[:-1] + 1
    np.cumsum(out, out=out)
    return out


class SparseMatrix:
    """Immutable compressed row-major sparse matrix.

    Invariants enforced at construction: `row_ptr` is nondecreasing with
    length nrows+1 ending at nnz, and column indices are strictly
    increasing within each row.  All arrays are frozen after validation so
    instances are safe to share across concurrent readers.
    """

    __slots__ = ("nrows", "ncols", "row_ptr", "col_idx", "values", "row_norms_sq")

    def __init__(self, nrows, ncols, row_ptr, col_idx, values, copy=True):
        self.nrows = int(nrows)
        self.ncols = int(ncols)
        self.row_ptr = np.array(row_ptr, dtype=np.int64, copy=copy)
        self.col_idx = np.array(col_idx, dtype=np.int64, copy=copy)
        self.values = np.array(values, dtype=np.float64, copy=copy)
        self._validate()
        self.row_norms_sq = _row_segment_sums(self.values * self.values, self.row_ptr)
        for arr in (self.row_ptr, self.col_idx, self.values, self.row_norms_sq):
            arr.setflags(write=False)

    def _validate(self):
        if self.nrows < 0 or self.ncols < 0:
            raise DimensionError("matrix dimensions must be nonnegative")
        if self.row_ptr.shape != (self.nrows + 1,):
            raise ValueError("row_ptr must have length nrows+1")
        if self.nrows >= 0 and (self.row_ptr[0] != 0 or np.any(np.diff(self.row_ptr) < 0)):
            raise ValueError("row_ptr must be nondecreasing and start at 0")
        nnz = int(self.row_ptr[-1])
        if self.col_idx.shape != (nnz,) or self.values.shape != (nnz,):
            raise ValueError("col_idx/values length must match row_ptr[-1]")
        if nnz == 0:
            return
        if self.col_idx.min() < 0 or self.col_idx.max() >= self.ncols:
            raise ValueError("column index out of range")
        if nnz > 1:
            diffs = np.diff(self.col_idx)
            within = np.ones(nnz - 1, dtype=bool)
            cross = self.row_ptr[1:-1] - 1
            within[cross[(cross >= 0) & (cross < nnz - 1)]] = False
            if np.any(diffs[within] <= 0):
                raise ValueError("column indices must be strictly increasing within each row")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    @property
    def nnz(self) -> int:
        return int(self.row_ptr[-1])

    def row(self, i: int):
        """(column indices, values) views of row `i`; O(1), no copies."""
        lo, hi = self.row_ptr[i], self.row_ptr[i + 1]
        return self.col_idx[lo:hi], self.values[lo:hi]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """Sparse product A @ x; cost proportional to nnz."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.ncols,):
            raise DimensionError(f"matvec expects length {self.ncols}, got {x.shape}")
        return _row_segment_sums(self.values * x[self.col_idx], self.row_ptr)

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        """Transpose product A.T @ y."""
        y = np.asarray(y, dtype=np.float64)
        if y.shape != (self.nrows,):
            raise DimensionError(f"rmatvec expects length {self.nrows}, got {y.shape}")
        weights = self.values * np.repeat(y, np.diff(self.row_ptr))
        return np.bincount(self.col_idx, weights=weights, minlength=self.ncols)

    def toarray(self) -> np.ndarray:
        out = np.zeros((self.nrows, self.ncols))
        rows = np.repeat(np.arange(self.nrows), np.diff(self.row_ptr))
        out[rows, self.col_idx] = self.values
        return out

    def dense_rows(self, start: int, stop: int) -> np.ndarray:
        """Dense copy of rows [start, stop); used for chunked Gram products."""
        out = np.zeros((stop - start, self.ncols))
        counts = np.diff(self.row_ptr[start : stop + 1])
        rows = np.repeat(np.arange(stop - start), counts)
        lo, hi = self.row_ptr[start], self.row_ptr[stop]
        out[rows, self.col_idx[lo:hi]] = self.values[lo:hi]
        return out

    @classmethod
    def from_coo(cls, nrows, ncols, rows, cols, vals) -> "SparseMatrix":
        """Build from coordinate triplets; duplicates are summed."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        if not (rows.shape == cols.shape == vals.shape) or rows.ndim != 1:
            raise DimensionError("coordinate arrays must be 1-D and equally long")
        if rows.size:
            if rows.min() < 0 or rows.max() >= nrows:
                raise ValueError("row index out of range")
            if cols.min() < 0 or cols.max() >= ncols:
                raise ValueError("column index out of range")
            order = np.lexsort((cols, rows))
            rows, cols, vals = rows[order], cols[order], vals[order]
            fresh = np.empty(rows.size, dtype=bool)
            fresh[0] = True
            fresh[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            starts = np.flatnonzero(fresh)
            vals = np.add.reduceat(vals, starts)
            rows, cols = rows[starts], cols[starts]
        row_ptr = np.zeros(nrows + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=nrows), out=row_ptr[1:])
        return cls(nrows, ncols, row_ptr, cols, vals, copy=False)

    @classmethod
    def from_dense(cls, arr, prune_zeros=True) -> "SparseMatrix":
        """Build from a dense 2-D array.

        With prune_zeros=False every entry is stored, giving a dense
        pattern (used by the Gaussian generator).
        """
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 2:
            raise DimensionError("dense input must be 2-D")
        m, n = arr.shape
        if prune_zeros:
            rows, cols = np.nonzero(arr)
            return cls.from_coo(m, n, rows, cols, arr[rows, cols])
        row_ptr = np.arange(m + 1, dtype=np.int64) * n
        col_idx = np.tile(np.arange(n, dtype=np.int64), m)
        return cls(m, n, row_ptr, col_idx, arr.ravel().copy(), copy=False)

    def __repr__(self):
        return f"SparseMatrix({self.nrows}x{self.ncols}, nnz={self.nnz})"


class RowBlock:
    """A selection of matrix rows in a fixed order.

    Holds a compressed copy of the selected rows so block products run at
    numpy speed; per-row sums use the same segment routine as the full
    matvec, so a gathered product is bit-identical to masking the full one.
    """

    __slots__ = ("parent", "rows", "row_ptr", "col_idx", "values", "row_norms_sq")

    def __init__(self, parent: SparseMatrix, rows: np.ndarray):
        rows = np.asarray(rows, dtype=np.int64)
        self.parent = parent
        self.rows = rows
        if rows.size:
            counts = np.diff(parent.row_ptr)[rows]
            flat = _concat_ranges(parent.row_ptr[rows], parent.row_ptr[rows + 1])
            self.col_idx = parent.col_idx[flat]
            self.values = parent.values[flat]
        else:
            counts = np.zeros(0, dtype=np.int64)
            self.col_idx = np.zeros(0, dtype=np.int64)
            self.values = np.zeros(0)
        self.row_ptr = np.zeros(rows.size + 1, dtype=np.int64)
        np.cumsum(counts, out=self.row_ptr[1:])
        self.row_norms_sq = parent.row_norms_sq[rows]

    @property
    def nrows(self) -> int:
        return self.rows.size

    @property
    def ncols(self) -> int:
        return self.parent.ncols

    @property
    def nnz(self) -> int:
        return int(self.row_ptr[-1])

    def matvec(self, d: np.ndarray) -> np.ndarray:
        """Block product A_I @ d over the selected rows, in order."""
        d = np.asarray(d, dtype=np.float64)
        if d.shape != (self.ncols,):
            raise DimensionError(f"block matvec expects length {self.ncols}, got {d.shape}")
        return _row_segment_sums(self.values * d[self.col_idx], self.row_ptr)

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        """Transpose block product A_I.T @ y; result has full column length."""
        y = np.asarray(y, dtype=np.float64)
        if y.shape != (self.nrows,):
            raise DimensionError(f"block rmatvec expects length {self.nrows}, got {y.shape}")
        weights = self.values * np.repeat(y, np.diff(self.row_ptr))
        return np.bincount(self.col_idx, weights=weights, minlength=self.ncols)

    def toarray(self) -> np.ndarray:
        out = np.zeros((self.nrows, self.ncols))
        rows = np.repeat(np.arange(self.nrows), np.diff(self.row_ptr))
        out[rows, self.col_idx] = self.values
        return out

    def __repr__(self):
        return f"RowBlock({self.nrows} of {self.parent.nrows} rows, ncols={self.ncols})"


def row_gather(A: SparseMatrix, idx) -> RowBlock:
    """Restrict A to the rows in `idx`, preserving their order.

    Indices must be distinct and in range.
    """
    idx = np.asarray(idx, dtype=np.int64)
    if idx.ndim != 1:
        raise ValueError("row indices must be a 1-D sequence")
    if idx.size:
        if idx.min() < 0 or idx.max() >= A.nrows:
            raise ValueError("row index out of range")
        if np.unique(idx).size != idx.size:
            raise ValueError("duplicate row indices")
    return RowBlock(A, idx)


@dataclass(frozen=True)
class SpectrumEstimate:
    """Extremal eigenvalues of A.T A.

    `lambda_max` always comes from power iteration; `lambda_min_plus` is
    present only when a dense-exact eigensolve was affordable, in which
    case `method` is "dense-exact" (otherwise "power-iteration").
    """

    lambda_max: float
    lambda_min_plus: float | None
    method: str
    iterations_used: int
    tolerance: float

    def __post_init__(self):
        if self.lambda_min_plus is not None and self.lambda_min_plus > self.lambda_max * (1 + 1e-9):
            raise ValueError("lambda_min_plus exceeds lambda_max")


def _gram(A: SparseMatrix, chunk: int = 2048) -> np.ndarray:
    """Dense Gram matrix of the smaller side (A.T A or A A.T)."""
    if A.ncols <= A.nrows:
        G = np.zeros((A.ncols, A.ncols))
        for start in range(0, A.nrows, chunk):
            D = A.dense_rows(start, min(start + chunk, A.nrows))
            G += D.T @ D
        return G
    D = A.toarray()
    return D @ D.T


def estimate_spectrum(
    A: SparseMatrix,
    tol: float = 1e-10,
    max_iter: int = 5000,
    *,
    seed: int = 0,
    dense_threshold: int = DENSE_EXACT_THRESHOLD,
) -> SpectrumEstimate:
    """Estimate the extremal eigenvalues of A.T A.

    Power iteration (deterministically seeded) supplies lambda_max,
    stopping when the Rayleigh quotient changes by at most `tol`
    relatively, or at `max_iter`.  The smallest positive eigenvalue is
    computed only when min(m, n) <= dense_threshold, via a dense
    eigensolve of the Gram matrix with eigenvalues above
    RANK_CUTOFF_RTOL * lambda_max counted as positive.
    """
    if A.nnz == 0 or not np.any(A.values):
        raise DegenerateMatrixError("cannot estimate the spectrum of an all-zero matrix")
    gen = RngStream(seed).generator()
    v = gen.standard_normal(A.ncols)
    v /= np.linalg.norm(v)
    lam = 0.0
    its = 0
    for its in range(1, max_iter + 1):
        w = A.rmatvec(A.matvec(v))
        lam_new = float(v @ w)
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            # v landed in the null space; restart from a fresh direction
            v = gen.standard_normal(A.ncols)
            v /= np.linalg.norm(v)
            continue
        v = w / norm_w
        if abs(lam_new - lam) <= tol * max(abs(lam_new), np.finfo(float).tiny):
            lam = lam_new
            break
        lam = lam_new

    lambda_min_plus = None
    method = "power-iteration"
    if min(A.nrows, A.ncols) <= dense_threshold:
        eigs = np.linalg.eigvalsh(_gram(A))
        cutoff = RANK_CUTOFF_RTOL * max(float(eigs[-1]), lam)
        positive = eigs[eigs > cutoff]
        if positive.size:
            lambda_min_plus = min(float(positive[0]), lam)
            method = "dense-exact"
    return SpectrumEstimate(lam, lambda_min_plus, method, its, tol)
