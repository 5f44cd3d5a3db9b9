"""Compiled inner loops for the self-consistency iteration.

With ``J[i, j] = 1{u_j <= x_i <= v_j}`` and every row satisfying
``u <= x <= v``, the indicator splits as ``1{u_j <= x_i} - 1{v_j < x_i}``,
so both ``J @ k`` and ``J.T @ f`` reduce to differences of cumulative sums
over presorted orders.  One sweep is O(n) instead of O(n^2).
"""
import numpy as np
from numba import njit

CONVERGED = 0
MAX_ITER = 1
DEGENERATE = 2


@njit(cache=True)
def prepare(x, u, v):
    ord_u = np.argsort(u, kind="mergesort")
    ord_v = np.argsort(v, kind="mergesort")
    ord_x = np.argsort(x, kind="mergesort")
    # counts of u_j <= x_i and of v_j < x_i, per i
    n_u_le_x = np.searchsorted(u[ord_u], x, side="right")
    n_v_lt_x = np.searchsorted(v[ord_v], x, side="left")
    # counts of x_i <= v_j and of x_i < u_j, per j
    n_x_le_v = np.searchsorted(x[ord_x], v, side="right")
    n_x_lt_u = np.searchsorted(x[ord_x], u, side="left")
    return ord_u, n_u_le_x, ord_v, n_v_lt_x, ord_x, n_x_le_v, n_x_lt_u


@njit(cache=True)
def _band_sums(w, ord_a, cnt_a, ord_b, cnt_b, ca, cb, out):
    n = w.size
    ca[0] = 0.0
    cb[0] = 0.0
    for r in range(n):
        ca[r + 1] = ca[r] + w[ord_a[r]]
        cb[r + 1] = cb[r] + w[ord_b[r]]
    for r in range(out.size):
        out[r] = ca[cnt_a[r]] - cb[cnt_b[r]]


@njit(cache=True)
def coverage(x, u, v, k):
    """g_i = sum_j k_j 1{u_j <= x_i <= v_j}."""
    ord_u, n_u_le_x, ord_v, n_v_lt_x, _, _, _ = prepare(x, u, v)
    n = x.size
    out = np.empty(n)
    _band_sums(k, ord_u, n_u_le_x, ord_v, n_v_lt_x, np.empty(n + 1), np.empty(n + 1), out)
    return out


@njit(cache=True)
def self_consistency(x, u, v, tol, max_iter, floor):
    """Alternate f <- (1/g)/sum(1/g) and k <- (1/h)/sum(1/h) from k = 1/n.

    Returns ``(f, k, iterations, status, delta, bad_index)``.  ``bad_index``
    is the offending row when status is DEGENERATE, otherwise -1.
    """
    ord_u, n_u_le_x, ord_v, n_v_lt_x, ord_x, n_x_le_v, n_x_lt_u = prepare(x, u, v)
    n = x.size
    k = np.full(n, 1.0 / n)
    f = np.full(n, 1.0 / n)
    f_new = np.empty(n)
    g = np.empty(n)
    h = np.empty(n)
    ca = np.empty(n + 1)
    cb = np.empty(n + 1)
    delta = np.inf
    for it in range(1, max_iter + 1):
        _band_sums(k, ord_u, n_u_le_x, ord_v, n_v_lt_x, ca, cb, g)
        s = 0.0
        for i in range(n):
            if g[i] < floor:
                return f, k, it, DEGENERATE, delta, i
            s += 1.0 / g[i]
        delta = 0.0
        for i in range(n):
            f_new[i] = 1.0 / (g[i] * s)
            d = abs(f_new[i] - f[i])
            if d > delta:
                delta = d
            f[i] = f_new[i]

        _band_sums(f, ord_x, n_x_le_v, ord_x, n_x_lt_u, ca, cb, h)
        s = 0.0
        for j in range(n):
            if h[j] < floor:
                return f, k, it, DEGENERATE, delta, j
            s += 1.0 / h[j]
        for j in range(n):
            kj = 1.0 / (h[j] * s)
            d = abs(kj - k[j])
            if d > delta:
                delta = d
            k[j] = kj
        if delta <= tol:
            return f, k, it, CONVERGED, delta, -1
    return f, k, max_iter, MAX_ITER, delta, -1


@njit(cache=True)
def _reach(x, u, v, forward):
    n = x.size
    seen = np.zeros(n, dtype=np.bool_)
    stack = np.empty(n, dtype=np.int64)
    seen[0] = True
    stack[0] = 0
    top = 1
    count = 1
    while top > 0:
        top -= 1
        i = stack[top]
        for j in range(n):
            if seen[j]:
                continue
            # edge i -> j when interval j covers x_i
            if forward:
                hit = u[j] <= x[i] and x[i] <= v[j]
            else:
                hit = u[i] <= x[j] and x[j] <= v[i]
            if hit:
                seen[j] = True
                stack[top] = j
                top += 1
                count += 1
    return count


@njit(cache=True)
def strongly_connected(x, u, v):
    """True when the coverage digraph of J is strongly connected.

    J has a positive diagonal, so this is full indecomposability: the
    doubly-stochastic scaling (hence the NPMLE) exists and is unique.
    """
    n = x.size
    if n <= 1:
        return True
    return _reach(x, u, v, True) == n and _reach(x, u, v, False) == n
