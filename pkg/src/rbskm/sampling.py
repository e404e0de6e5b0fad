"""Row-subset sampling and greedy residual selection.

These are the two selection stages of the outer iteration: draw a
uniformly random size-beta subset of rows, then keep the delta rows whose
absolute subresidual entries dominate the rest.
"""

from __future__ import annotations

import numpy as np

from .rng import RngStream

__all__ = ["IndexSet", "RngStream", "sample_uniform_subset", "top_delta"]


class IndexSet:
    """Distinct row indices stored in ascending order over a universe [0, m)."""

    __slots__ = ("indices", "universe")

    def __init__(self, indices, universe: int, _trusted: bool = False):
        idx = np.asarray(indices, dtype=np.int64)
        if not _trusted:
            idx = np.sort(idx)
            if idx.ndim != 1:
                raise ValueError("indices must be 1-D")
            if idx.size:
                if idx[0] < 0 or idx[-1] >= universe:
                    raise ValueError("index outside the universe")
                if np.any(idx[1:] == idx[:-1]):
                    raise ValueError("indices must be distinct")
        self.indices = idx
        self.indices.setflags(write=False)
        self.universe = int(universe)

    def __len__(self):
        return self.indices.size

    def __iter__(self):
        return iter(self.indices.tolist())

    def __eq__(self, other):
        return (
            isinstance(other, IndexSet)
            and self.universe == other.universe
            and np.array_equal(self.indices, other.indices)
        )

    def __repr__(self):
        return f"IndexSet({self.indices.tolist()}, universe={self.universe})"


def _reject_sample(m: int, k: int, gen: np.random.Generator) -> np.ndarray:
    """First k distinct values of an i.i.d. uniform stream over [0, m)."""
    chosen: set[int] = set()
    out = np.empty(k, dtype=np.int64)
    have = 0
    while have < k:
        draw = gen.integers(0, m, size=max(8, int((k - have) * 1.3) + 1))
        for val in draw:
            val = int(val)
            if val not in chosen:
                chosen.add(val)
                out[have] = val
                have += 1
                if have == k:
                    break
    return out


def sample_uniform_subset(m: int, beta: int, rng: RngStream) -> IndexSet:
    """A size-beta subset of {0..m-1} with every subset equally likely.

    Expected O(beta) work: rejection against a membership set, switching
    to sampling the complement when beta > m/2.  beta == m consumes no
    randomness.
    """
    if not 1 <= beta <= m:
        raise ValueError(f"beta must lie in [1, {m}], got {beta}")
    if beta == m:
        return IndexSet(np.arange(m, dtype=np.int64), m, _trusted=True)
    if beta <= m // 2:
        picked = _reject_sample(m, beta, rng.generator())
        picked.sort()
        return IndexSet(picked, m, _trusted=True)
    complement = _reject_sample(m, m - beta, rng.generator())
    mask = np.ones(m, dtype=bool)
    mask[complement] = False
    return IndexSet(np.flatnonzero(mask).astype(np.int64), m, _trusted=True)


def top_delta(sub_abs_residual, rows: IndexSet, delta: int) -> IndexSet:
    """Rows carrying the delta largest values; ties go to the smallest row.

    `sub_abs_residual` holds the absolute subresidual entries aligned with
    `rows`.  Partial selection (expected O(beta)); every selected value is
    >= every excluded value.
    """
    v = np.asarray(sub_abs_residual, dtype=np.float64)
    if v.ndim != 1 or v.size != len(rows):
        raise ValueError("values must be 1-D and aligned with the index set")
    if not 1 <= delta <= v.size:
        raise ValueError(f"delta must lie in [1, {v.size}], got {delta}")
    if delta == v.size:
        return rows
    kth = v.size - delta
    threshold = np.partition(v, kth)[kth]
    pos = np.flatnonzero(v > threshold)
    if pos.size < delta:
        # stable pass over the ties: ascending positions = ascending rows
        ties = np.flatnonzero(v == threshold)[: delta - pos.size]
        pos = np.sort(np.concatenate([pos, ties]))
    return IndexSet(rows.indices[pos], rows.universe, _trusted=True)
