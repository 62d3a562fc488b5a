"""numba kernels for the solver inner loops.

All matrices arrive as raw CSR arrays.  ``cptr/cidx/cval`` are the CSR
arrays of the transpose (column adjacency of A).
"""
import numpy as np
from numba import njit

_OPTS = dict(cache=True, nogil=True)


@njit(**_OPTS)
def csr_row_sq_norms(indptr, data):
    m = indptr.shape[0] - 1
    out = np.zeros(m)
    for i in range(m):
        s = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            s += data[p] * data[p]
        out[i] = s
    return out


@njit(**_OPTS)
def csr_matvec(indptr, indices, data, x, m):
    out = np.zeros(m)
    for i in range(m):
        s = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            s += data[p] * x[indices[p]]
        out[i] = s
    return out


@njit(**_OPTS)
def gram_col(indptr, indices, data, cptr, cidx, cval, i, mark, acc, out_idx, out_val):
    """Write the sparse column ``A @ A[i].T`` into out_idx/out_val, sorted by row.

    Each entry accumulates its products in ascending column order, which is
    the order of a merge-join over the two rows' sorted indices.
    ``mark`` must be all -1 on entry and is restored on exit.
    """
    cnt = 0
    for p in range(indptr[i], indptr[i + 1]):
        j = indices[p]
        a = data[p]
        for q in range(cptr[j], cptr[j + 1]):
            ell = cidx[q]
            if mark[ell] < 0:
                mark[ell] = cnt
                out_idx[cnt] = ell
                acc[ell] = 0.0
                cnt += 1
            acc[ell] += cval[q] * a
    out_idx[:cnt].sort()
    for t in range(cnt):
        ell = out_idx[t]
        out_val[t] = acc[ell]
        mark[ell] = -1
    return cnt


@njit(**_OPTS)
def overlap_counts(indptr, indices, cptr, cidx, m):
    """Per row i: |T_i| (rows sharing a column with i) and sum over l of s_{i,l}."""
    mark = np.full(m, -1, dtype=np.int64)
    t_sizes = np.zeros(m, dtype=np.int64)
    s_sums = np.zeros(m, dtype=np.int64)
    for i in range(m):
        cnt = 0
        tot = 0
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            tot += cptr[j + 1] - cptr[j]
            for q in range(cptr[j], cptr[j + 1]):
                ell = cidx[q]
                if mark[ell] != i:
                    mark[ell] = i
                    cnt += 1
        t_sizes[i] = cnt
        s_sums[i] = tot
    return t_sizes, s_sums


@njit(**_OPTS)
def build_gram(indptr, indices, data, cptr, cidx, cval, m):
    t_sizes, _ = overlap_counts(indptr, indices, cptr, cidx, m)
    gptr = np.zeros(m + 1, dtype=np.int64)
    for i in range(m):
        gptr[i + 1] = gptr[i] + t_sizes[i]
    gidx = np.empty(gptr[m], dtype=np.int64)
    gval = np.empty(gptr[m])
    mark = np.full(m, -1, dtype=np.int64)
    acc = np.zeros(m)
    out_idx = np.empty(m, dtype=np.int64)
    out_val = np.empty(m)
    for i in range(m):
        cnt = gram_col(indptr, indices, data, cptr, cidx, cval, i, mark, acc, out_idx, out_val)
        lo = gptr[i]
        for t in range(cnt):
            gidx[lo + t] = out_idx[t]
            gval[lo + t] = out_val[t]
    return gptr, gidx, gval


@njit(**_OPTS)
def gram_col_sq_norms(gptr, gval, m):
    out = np.zeros(m)
    for i in range(m):
        s = 0.0
        for p in range(gptr[i], gptr[i + 1]):
            s += gval[p] * gval[p]
        out[i] = s
    return out


@njit(**_OPTS)
def _sq_dist(x, x_star):
    s = 0.0
    for t in range(x.shape[0]):
        d = x[t] - x_star[t]
        s += d * d
    return s


# Every solver kernel below runs at most ``len(draws)`` steps starting at
# iteration ``k``.  After each step whose new counter is a multiple of
# ``check_every`` it evaluates the squared solution error and returns early
# once it drops to ``tol_abs`` (= rse_tol * ||x_star||^2).  Returns
# (steps_taken, converged, flops_added, last_sq_err).  last_sq_err is -1.0
# when no check happened.


@njit(**_OPTS)
def rkas_steps(
    indptr, indices, data, cptr, cidx, cval,
    stored, gptr, gidx, gval, gnorm_sq,
    x, r, draws, k, check_every, x_star, tol_abs, step_cost,
    mark, acc, out_idx, out_val,
):
    flops = 0
    last = -1.0
    for t in range(draws.shape[0]):
        i = draws[t]
        if stored:
            lo = gptr[i]
            cnt = gptr[i + 1] - lo
            num = 0.0
            for q in range(cnt):
                num += gval[lo + q] * r[gidx[lo + q]]
            den = gnorm_sq[i]
            alpha = num / den
            for p in range(indptr[i], indptr[i + 1]):
                x[indices[p]] -= alpha * data[p]
            for q in range(cnt):
                r[gidx[lo + q]] -= alpha * gval[lo + q]
        else:
            cnt = gram_col(indptr, indices, data, cptr, cidx, cval, i, mark, acc, out_idx, out_val)
            den = 0.0
            for q in range(cnt):
                den += out_val[q] * out_val[q]
            num = 0.0
            for q in range(cnt):
                num += out_val[q] * r[out_idx[q]]
            alpha = num / den
            for p in range(indptr[i], indptr[i + 1]):
                x[indices[p]] -= alpha * data[p]
            for q in range(cnt):
                r[out_idx[q]] -= alpha * out_val[q]
        flops += step_cost[i]
        k += 1
        if k % check_every == 0:
            last = _sq_dist(x, x_star)
            if last <= tol_abs:
                return t + 1, True, flops, last
    return draws.shape[0], False, flops, last


@njit(**_OPTS)
def rk_steps(
    indptr, indices, data, b, row_sq, lam,
    x, draws, k, check_every, x_star, tol_abs, step_cost,
):
    flops = 0
    last = -1.0
    for t in range(draws.shape[0]):
        i = draws[t]
        dot = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            dot += data[p] * x[indices[p]]
        coef = lam * ((dot - b[i]) / row_sq[i])
        for p in range(indptr[i], indptr[i + 1]):
            x[indices[p]] -= coef * data[p]
        flops += step_cost[i]
        k += 1
        if k % check_every == 0:
            last = _sq_dist(x, x_star)
            if last <= tol_abs:
                return t + 1, True, flops, last
    return draws.shape[0], False, flops, last


@njit(**_OPTS)
def rek_steps(
    indptr, indices, data, cptr, cidx, cval, b, row_sq, col_sq,
    x, z, row_draws, col_draws, k, check_every, x_star, tol_abs,
    row_cost, col_cost,
):
    flops = 0
    last = -1.0
    for t in range(row_draws.shape[0]):
        j = col_draws[t]
        dot = 0.0
        for q in range(cptr[j], cptr[j + 1]):
            dot += cval[q] * z[cidx[q]]
        coef = dot / col_sq[j]
        for q in range(cptr[j], cptr[j + 1]):
            z[cidx[q]] -= coef * cval[q]
        i = row_draws[t]
        dot = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            dot += data[p] * x[indices[p]]
        coef = (dot - b[i] + z[i]) / row_sq[i]
        for p in range(indptr[i], indptr[i + 1]):
            x[indices[p]] -= coef * data[p]
        flops += row_cost[i] + col_cost[j]
        k += 1
        if k % check_every == 0:
            last = _sq_dist(x, x_star)
            if last <= tol_abs:
                return t + 1, True, flops, last
    return row_draws.shape[0], False, flops, last


@njit(**_OPTS)
def alias_lookup(u, prob, alias):
    n = prob.shape[0]
    out = np.empty(u.shape[0], dtype=np.int64)
    for t in range(u.shape[0]):
        v = u[t] * n
        col = int(v)
        if col >= n:
            col = n - 1
        if v - col < prob[col]:
            out[t] = col
        else:
            out[t] = alias[col]
    return out
