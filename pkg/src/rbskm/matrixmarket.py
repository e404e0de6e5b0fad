"""Matrix Market exchange format: coordinate and array, real-valued.

Symmetry flags general / symmetric / skew-symmetric are honored (stored
off-diagonal entries are mirrored), 1-based indices become 0-based, and
duplicate coordinate entries are summed.  Comment lines start with '%'.
Pattern and complex fields are rejected.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np

from .errors import MatrixMarketError
from .sparse import SparseMatrix

_FORMATS = {"coordinate", "array"}
_FIELDS = {"real", "integer"}
_SYMMETRIES = {"general", "symmetric", "skew-symmetric"}


def load_matrix_market(source) -> SparseMatrix:
    """Parse Matrix Market text into a SparseMatrix.

    `source` may be a filesystem path or a readable text/binary stream.
    Raises MatrixMarketError with the offending line number on malformed
    input.
    """
    if hasattr(source, "read"):
        data = source.read()
        if isinstance(data, bytes):
            data = data.decode("ascii", errors="replace")
        return _parse(io.StringIO(data))
    with open(source, "r", encoding="ascii", errors="replace") as fh:
        return _parse(fh)


def _parse(fh) -> SparseMatrix:
    lines = enumerate(fh, start=1)
    try:
        line_no, line = next(lines)
    except StopIteration:
        raise MatrixMarketError("empty input", 1) from None
    tokens = line.split()
    if len(tokens) != 5 or tokens[0].lower() != "%%matrixmarket" or tokens[1].lower() != "matrix":
        raise MatrixMarketError("expected '%%MatrixMarket matrix <format> <field> <symmetry>'", line_no)
    fmt, field, symmetry = (t.lower() for t in tokens[2:5])
    if fmt not in _FORMATS:
        raise MatrixMarketError(f"unsupported format '{fmt}'", line_no)
    if field not in _FIELDS:
        raise MatrixMarketError(f"unsupported field '{field}' (only real/integer)", line_no)
    if symmetry not in _SYMMETRIES:
        raise MatrixMarketError(f"unsupported symmetry '{symmetry}'", line_no)

    line_no, tokens = _next_data(lines)
    if tokens is None:
        raise MatrixMarketError("missing size line", line_no)
    expected = 3 if fmt == "coordinate" else 2
    if len(tokens) != expected:
        raise MatrixMarketError(f"size line must have {expected} integers", line_no)
    try:
        sizes = [int(t) for t in tokens]
    except ValueError:
        raise MatrixMarketError("size line must contain integers", line_no) from None
    if any(s < 0 for s in sizes):
        raise MatrixMarketError("sizes must be nonnegative", line_no)

    if fmt == "coordinate":
        nrows, ncols, nnz = sizes
        rows, cols, vals = _read_coordinate(lines, nrows, ncols, nnz)
    else:
        nrows, ncols = sizes
        rows, cols, vals = _read_array(lines, nrows, ncols, symmetry)

    if symmetry != "general":
        rows, cols, vals = _mirror(rows, cols, vals, symmetry)
    return SparseMatrix.from_coo(nrows, ncols, rows, cols, vals)


def _next_data(lines):
    """Next non-comment, non-blank line as a token list."""
    for line_no, line in lines:
        stripped = line.strip()
        if not stripped or stripped.startswith("%"):
            continue
        return line_no, stripped.split()
    return None, None


def _read_coordinate(lines, nrows, ncols, nnz):
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz)
    count = 0
    last_line = None
    while count < nnz:
        line_no, tokens = _next_data(lines)
        if tokens is None:
            raise MatrixMarketError(
                f"file ended after {count} of {nnz} entries", last_line or 0
            )
        last_line = line_no
        if len(tokens) != 3:
            raise MatrixMarketError("coordinate entry must be 'i j value'", line_no)
        try:
            i, j, v = int(tokens[0]), int(tokens[1]), float(tokens[2])
        except ValueError:
            raise MatrixMarketError(f"cannot parse entry '{' '.join(tokens)}'", line_no) from None
        if not (1 <= i <= nrows and 1 <= j <= ncols):
            raise MatrixMarketError(f"index ({i}, {j}) outside declared {nrows}x{ncols}", line_no)
        rows[count], cols[count], vals[count] = i - 1, j - 1, v
        count += 1
    line_no, tokens = _next_data(lines)
    if tokens is not None:
        raise MatrixMarketError("data past the declared entry count", line_no)
    return rows, cols, vals


def _read_array(lines, nrows, ncols, symmetry):
    if symmetry == "general":
        entries = [(i, j) for j in range(ncols) for i in range(nrows)]
    else:
        if nrows != ncols:
            raise MatrixMarketError("symmetric array matrices must be square", 0)
        skip_diag = symmetry == "skew-symmetric"
        entries = [
            (i, j)
            for j in range(ncols)
            for i in range(j + 1 if skip_diag else j, nrows)
        ]
    rows = np.empty(len(entries), dtype=np.int64)
    cols = np.empty(len(entries), dtype=np.int64)
    vals = np.empty(len(entries))
    count = 0
    last_line = None
    while count < len(entries):
        line_no, tokens = _next_data(lines)
        if tokens is None:
            raise MatrixMarketError(
                f"file ended after {count} of {len(entries)} array values", last_line or 0
            )
        last_line = line_no
        for tok in tokens:
            if count >= len(entries):
                raise MatrixMarketError("data past the declared array size", line_no)
            try:
                v = float(tok)
            except ValueError:
                raise MatrixMarketError(f"cannot parse value '{tok}'", line_no) from None
            rows[count], cols[count] = entries[count]
            vals[count] = v
            count += 1
    line_no, tokens = _next_data(lines)
    if tokens is not None:
        raise MatrixMarketError("data past the declared array size", line_no)
    return rows, cols, vals


def _mirror(rows, cols, vals, symmetry):
    off = rows != cols
    sign = -1.0 if symmetry == "skew-symmetric" else 1.0
    return (
        np.concatenate([rows, cols[off]]),
        np.concatenate([cols, rows[off]]),
        np.concatenate([vals, sign * vals[off]]),
    )


def save_matrix_market(A: SparseMatrix, target) -> None:
    """Write coordinate/real/general text with full float precision.

    Reloading the output reproduces the matrix arrays exactly.
    """
    own = not hasattr(target, "write")
    fh = open(target, "w", encoding="ascii") if own else target
    try:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        fh.write(f"{A.nrows} {A.ncols} {A.nnz}\n")
        rows = np.repeat(np.arange(A.nrows), np.diff(A.row_ptr))
        for i, j, v in zip(rows, A.col_idx, A.values):
            fh.write(f"{i + 1} {j + 1} {float(v)!r}\n")
    finally:
        if own:
            fh.close()


def dataset_path(name: str, data_dir=None) -> Path:
    """Path of a named .mtx dataset under a local data directory.

    The directory defaults to ./data relative to the working directory and
    can be overridden with the RBSKM_DATA_DIR environment variable.
    """
    import os

    root = Path(data_dir or os.environ.get("RBSKM_DATA_DIR", "data"))
    return root / f"{name}.mtx"
