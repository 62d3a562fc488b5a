"""Sparse-structure analysis and flop accounting for REK and RKAS.

Counting convention
-------------------
One flop per scalar multiply, add, subtract or divide.  Square roots,
comparisons and index sampling are free.  A dot product of two sparse vectors
sharing ``s`` nonzero positions costs ``2s - 1``.

Notation: ``s[i, l]`` is the number of columns where rows ``i`` and ``l`` are
both nonzero, ``T_i`` the set of rows overlapping row ``i`` (row ``i``
included), ``|T| = sum_i |T_i|`` counts ordered pairs, and ``m_j`` is the
nonzero count of column ``j``.

With stored Gram matrix the initialization computes each Gram entry once per
unordered pair, squares each unordered entry once for the column norms, and
computes row norms directly from A.  That reproduces
``sum_{i<=l}(2 s_il - 1) + 2 sum_i s_ii + 3/2 |T| - 3m/2`` exactly.

The instrumented kernels at the bottom route every arithmetic operation
through a :class:`Tally`, so measured counts are an independent check of
the closed forms.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from . import _kernels
from .linalg import as_matrix


@dataclass
class SparsityProfile:
    m: int
    n: int
    s: dict  # (i, l) with i <= l -> overlap count
    t_sizes: np.ndarray
    t_total: int
    col_nnz: np.ndarray

    def overlap(self, i, ell):
        key = (i, ell) if i <= ell else (ell, i)
        return self.s.get(key, 0)

    def row_nnz(self, i):
        return self.s[(i, i)]

    def overlaps_of(self, i):
        """Mapping l -> s[i, l] over T_i."""
        return {(b if a == i else a): c for (a, b), c in self.s.items() if i in (a, b)}


def profile(A):
    """Exact overlap structure via the column-to-rows adjacency."""
    A = as_matrix(A).to_csr()
    m, n = A.shape
    At = A.transpose()
    s = {}
    for i in range(m):
        cols_i = A.indices[A.indptr[i]:A.indptr[i + 1]]
        cand = set()
        for j in cols_i:
            cand.update(At.indices[At.indptr[j]:At.indptr[j + 1]].tolist())
        for ell in cand:
            if ell < i:
                continue
            cols_l = A.indices[A.indptr[ell]:A.indptr[ell + 1]]
            s[(i, ell)] = int(np.intersect1d(cols_i, cols_l, assume_unique=True).size)
    t_sizes = np.zeros(m, dtype=np.int64)
    for (i, ell) in s:
        t_sizes[i] += 1
        if ell != i:
            t_sizes[ell] += 1
    return SparsityProfile(
        m=m, n=n, s=s, t_sizes=t_sizes, t_total=int(t_sizes.sum()),
        col_nnz=np.diff(At.indptr).astype(np.int64),
    )


class FlopModel(NamedTuple):
    init: int
    step: Callable


def _sum_diag(p):
    return sum(p.s[(i, i)] for i in range(p.m))


def rek_flops(p):
    init = 2 * _sum_diag(p) + 2 * int(p.col_nnz.sum()) - p.m - p.n

    def step(i, j):
        return 4 * p.s[(i, i)] + 4 * int(p.col_nnz[j]) + 2

    return FlopModel(init, step)


def rkas_flops_stored(p):
    upper = sum(2 * c - 1 for c in p.s.values())
    extra = 3 * (p.t_total - p.m)
    assert extra % 2 == 0  # |T| - m counts each off-diagonal pair twice
    init = upper + 2 * _sum_diag(p) + extra // 2

    def step(i):
        return 2 * p.s[(i, i)] + 4 * int(p.t_sizes[i])

    return FlopModel(init, step)


def rkas_flops_unstored(p):
    init = 2 * _sum_diag(p) - p.m

    def step(i):
        overlaps = p.overlaps_of(i)
        return 2 * p.s[(i, i)] + 5 * int(p.t_sizes[i]) + 2 * sum(overlaps.values()) - 1

    return FlopModel(init, step)


def rk_flops(p):
    """Relaxed RK, same convention: residual ``2s-1``, ``-b_i``, divide, scale, update."""
    init = 2 * _sum_diag(p) - p.m

    def step(i):
        return 4 * p.s[(i, i)] + 2

    return FlopModel(init, step)


# -- vectorized costs for the fast solvers ----------------------------------


@dataclass(frozen=True)
class CostTable:
    """Per-row/column step costs and init cost, computed without the pair map."""

    init: int
    row_cost: np.ndarray
    col_cost: np.ndarray | None = None


def cost_table(A, method, store_gram=True):
    """Closed-form costs from row/column counts alone, for runtime ledgers."""
    A = as_matrix(A).to_csr()
    m, n = A.shape
    At = A.transpose()
    row_nnz = np.diff(A.indptr).astype(np.int64)
    col_nnz = np.diff(At.indptr).astype(np.int64)
    sum_diag = int(row_nnz.sum())
    if method == "rek":
        return CostTable(
            init=2 * sum_diag + 2 * int(col_nnz.sum()) - m - n,
            row_cost=4 * row_nnz + 2,
            col_cost=4 * col_nnz,
        )
    if method == "rk":
        return CostTable(init=2 * sum_diag - m, row_cost=4 * row_nnz + 2)
    if method != "rkas":
        raise ValueError(f"unknown method {method!r}")
    t_sizes, s_sums = _kernels.overlap_counts(A.indptr, A.indices, At.indptr, At.indices, m)
    if store_gram:
        # sum over ordered pairs of (2s-1) = 2*sum(s_sums) - |T|; halve after
        # adding the diagonal back to get the i <= l sum
        t_total = int(t_sizes.sum())
        ordered = 2 * int(s_sums.sum()) - t_total
        upper = (ordered + (2 * sum_diag - m)) // 2
        init = upper + 2 * sum_diag + 3 * (t_total - m) // 2
        return CostTable(init=init, row_cost=2 * row_nnz + 4 * t_sizes)
    return CostTable(
        init=2 * sum_diag - m,
        row_cost=2 * row_nnz + 5 * t_sizes + 2 * s_sums - 1,
    )


# -- instrumented kernels ---------------------------------------------------


@dataclass
class FlopLedger:
    init_flops: int = 0
    iter_flops: int = 0
    steps: list = field(default_factory=list)

    @property
    def total(self):
        return self.init_flops + self.iter_flops


class Tally:
    """Scalar arithmetic that counts itself."""

    def __init__(self):
        self.count = 0

    def mul(self, a, b):
        self.count += 1
        return a * b

    def add(self, a, b):
        self.count += 1
        return a + b

    def sub(self, a, b):
        self.count += 1
        return a - b

    def div(self, a, b):
        self.count += 1
        return a / b

    def dot(self, pairs):
        """Sum of products over a nonempty sequence of ``(a, b)`` pairs."""
        it = iter(pairs)
        try:
            a, b = next(it)
        except StopIteration:
            raise ValueError("dot product of empty sequences") from None
        acc = self.mul(a, b)
        for a, b in it:
            acc = self.add(acc, self.mul(a, b))
        return acc

    def sum(self, values):
        it = iter(values)
        try:
            acc = next(it)
        except StopIteration:
            raise ValueError("sum of an empty sequence") from None
        for v in it:
            acc = self.add(acc, v)
        return acc


class _Rows:
    """Plain-Python sparse rows and columns for the counting kernels."""

    def __init__(self, A):
        A = as_matrix(A).to_csr()
        self.m, self.n = A.shape
        self.rows = [dict(zip(*map(np.ndarray.tolist, A.row(i)))) for i in range(self.m)]
        self.cols = [dict() for _ in range(self.n)]
        for i, row in enumerate(self.rows):
            for j, v in row.items():
                self.cols[j][i] = v

    @staticmethod
    def common(u, v):
        return [(u[k], v[k]) for k in sorted(u.keys() & v.keys())]

    def overlapping(self, i):
        out = set()
        for j in self.rows[i]:
            out.update(self.cols[j])
        return sorted(out)


def _measure(tally, fn, *args):
    before = tally.count
    out = fn(*args)
    return out, tally.count - before


def instrumented_rkas(A, b, draws, store_gram=True):
    """Run RKAS with counting arithmetic.  Returns ``(ledger, x, r)``."""
    R = _Rows(A)
    m, n = R.m, R.n
    b = [float(v) for v in b]
    tally = Tally()
    ledger = FlopLedger()
    x = [0.0] * n
    r = [-v for v in b]  # r0 = -b is free: sign flip, no arithmetic

    def init():
        row_sq = [tally.dot(R.common(R.rows[i], R.rows[i])) for i in range(m)]
        if not store_gram:
            return row_sq, None, None
        gram = [dict() for _ in range(m)]
        for i in range(m):
            for ell in R.overlapping(i):
                if ell < i:
                    continue
                v = tally.dot(R.common(R.rows[i], R.rows[ell]))
                gram[i][ell] = v
                gram[ell][i] = v
        squares = {}
        for i in range(m):
            for ell, v in gram[i].items():
                if ell >= i:
                    squares[(i, ell)] = tally.mul(v, v)
        gnorm = [
            tally.sum(squares[(min(i, l), max(i, l))] for l in sorted(gram[i]))
            for i in range(m)
        ]
        return row_sq, gram, gnorm

    (row_sq, gram, gnorm), ledger.init_flops = _measure(tally, init)

    def step(i):
        if store_gram:
            g = gram[i]
            den = gnorm[i]
        else:
            g = {ell: tally.dot(R.common(R.rows[i], R.rows[ell])) for ell in R.overlapping(i)}
            den = tally.dot((v, v) for v in g.values())
        num = tally.dot((v, r[ell]) for ell, v in g.items())
        alpha = tally.div(num, den)
        for j, a in R.rows[i].items():
            x[j] = tally.sub(x[j], tally.mul(alpha, a))
        for ell, v in g.items():
            r[ell] = tally.sub(r[ell], tally.mul(alpha, v))

    for i in draws:
        _, cost = _measure(tally, step, int(i))
        ledger.steps.append(cost)
        ledger.iter_flops += cost
    return ledger, np.array(x), np.array(r)


def instrumented_rek(A, b, row_draws, col_draws):
    """Run REK with counting arithmetic.  Returns ``(ledger, x, z)``."""
    R = _Rows(A)
    m, n = R.m, R.n
    b = [float(v) for v in b]
    tally = Tally()
    ledger = FlopLedger()
    x = [0.0] * n
    z = list(b)

    def init():
        row_sq = [tally.dot(R.common(R.rows[i], R.rows[i])) for i in range(m)]
        col_sq = [tally.dot(R.common(R.cols[j], R.cols[j])) for j in range(n)]
        return row_sq, col_sq

    (row_sq, col_sq), ledger.init_flops = _measure(tally, init)

    def step(i, j):
        col = R.cols[j]
        coef = tally.div(tally.dot((v, z[ell]) for ell, v in col.items()), col_sq[j])
        for ell, v in col.items():
            z[ell] = tally.sub(z[ell], tally.mul(coef, v))
        row = R.rows[i]
        ax = tally.dot((v, x[k]) for k, v in row.items())
        coef = tally.div(tally.add(tally.sub(ax, b[i]), z[i]), row_sq[i])
        for k, v in row.items():
            x[k] = tally.sub(x[k], tally.mul(coef, v))

    for i, j in zip(row_draws, col_draws):
        _, cost = _measure(tally, step, int(i), int(j))
        ledger.steps.append(cost)
        ledger.iter_flops += cost
    return ledger, np.array(x), np.array(z)


def instrumented_rk(A, b, draws, lam=1.0):
    R = _Rows(A)
    b = [float(v) for v in b]
    tally = Tally()
    ledger = FlopLedger()
    x = [0.0] * R.n

    row_sq, ledger.init_flops = _measure(
        tally, lambda: [tally.dot(R.common(row, row)) for row in R.rows]
    )

    def step(i):
        row = R.rows[i]
        res = tally.sub(tally.dot((v, x[k]) for k, v in row.items()), b[i])
        coef = tally.mul(lam, tally.div(res, row_sq[i]))
        for k, v in row.items():
            x[k] = tally.sub(x[k], tally.mul(coef, v))

    for i in draws:
        _, cost = _measure(tally, step, int(i))
        ledger.steps.append(cost)
        ledger.iter_flops += cost
    return ledger, np.array(x)
