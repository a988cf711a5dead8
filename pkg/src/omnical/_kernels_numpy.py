"""Hot numeric kernels, pure numpy/python reference implementations.

These functions are written in numba-compilable style; `_kernels_numba`
wraps the exact same source with @njit. Keep them free of Python objects,
exceptions, and fancy indexing.
"""

import numpy as np


def solve_zero_sum(M, eps, max_iter, check_every):
    """Approximate saddle point of min_{a in simplex} max_{b in simplex} b^T M a.

    The row (max) player runs anytime multiplicative weights against exact
    column best responses; uniform averages of both players' iterates give a
    primal/dual certificate. Stops once primal - dual <= eps.

    Returns (a, b, primal, dual, iters, converged). primal = max(M a) upper
    bounds the value within the certificate gap; dual = min(b^T M) lower
    bounds it.
    """
    k, n = M.shape
    L = max(np.abs(M).max(), 1e-12)
    if k == 1:
        j = int(np.argmin(M[0]))
        a = np.zeros(n)
        a[j] = 1.0
        b = np.ones(1)
        return a, b, M[0, j], M[0, j], 1, True
    logk = np.log(k)
    logw = np.zeros(k)
    bsum = np.zeros(k)
    acnt = np.zeros(n)
    ma_sum = np.zeros(k)
    btm_sum = np.zeros(n)
    primal = np.inf
    dual = -np.inf
    t = 0
    for t in range(1, max_iter + 1):
        w = np.exp(logw - logw.max())
        b = w / w.sum()
        btm = b @ M
        s = int(np.argmin(btm))
        bsum += b
        acnt[s] += 1.0
        ma_sum += M[:, s]
        btm_sum += btm
        eta = np.sqrt(logk / t) / L
        logw += eta * M[:, s]
        if t % check_every == 0 or t == max_iter:
            primal = ma_sum.max() / t
            dual = btm_sum.min() / t
            if primal - dual <= eps:
                return acnt / t, bsum / t, primal, dual, t, True
    return acnt / t, bsum / t, primal, dual, t, False


def binary_oracle_case(grid, u, q, r, d):
    """Case analysis for the binary mixture oracle on an ascending grid.

    h(p_j) = q * sum_s u_s sign(p_j - s) + r * d with sign(0) = +1, computed
    via the running mass below-or-at p_j. Returns (lo, hi, w_lo): the output
    is w_lo on grid[lo] and 1 - w_lo on grid[hi]; a point mass has lo == hi.
    (-1, -1, 0.0) signals the impossible no-crossing case.
    """
    n = grid.shape[0]
    total = 0.0
    for j in range(n):
        total += u[j]
    h = np.empty(n)
    c = 0.0
    for j in range(n):
        c += u[j]
        h[j] = q * (2.0 * c - total) + r * d
    if h[0] >= 0.0:
        return 0, 0, 1.0
    if h[n - 1] <= 0.0:
        return n - 1, n - 1, 1.0
    for j in range(1, n):
        if h[j] >= 0.0:
            lo = j - 1
            denom = abs(h[lo]) + abs(h[j])
            if denom <= 0.0:
                return lo, lo, 1.0
            return lo, j, abs(h[j]) / denom
    return -1, -1, 0.0
