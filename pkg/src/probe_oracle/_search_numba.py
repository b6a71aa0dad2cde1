"""Compiled kernels for the exhaustive subset search.

Strategy: one augmented Gram matrix [X|1]^T[X|1] per training fold, built
once; each candidate subset then costs a (k+1)x(k+1) gather, a tiny Cholesky
solve, and the held-out residuals.  Singular subsets (duplicated or constant
columns, or more parameters than training rows) fall back to the minimum-norm
solution via an eigendecomposition, matching the least-squares contract.

Every subset writes only its own output slot and all reductions are serial,
so results are bit-identical for any worker count.
"""

import numpy as np
from numba import njit, prange

_PIVOT_RTOL = 1e-12
_EIG_RCOND = 1e-10


@njit(cache=True)
def _solve_inplace(G, rhs, theta, L, p):
    # Cholesky with a relative pivot floor; returns False when not safely PD
    for j in range(p):
        d = G[j, j]
        for t in range(j):
            d -= L[j, t] * L[j, t]
        floor = G[j, j] * _PIVOT_RTOL
        if floor < 1e-30:
            floor = 1e-30
        if d <= floor:
            return False
        L[j, j] = np.sqrt(d)
        for i in range(j + 1, p):
            v = G[i, j]
            for t in range(j):
                v -= L[i, t] * L[j, t]
            L[i, j] = v / L[j, j]
    for j in range(p):
        v = rhs[j]
        for t in range(j):
            v -= L[j, t] * theta[t]
        theta[j] = v / L[j, j]
    for j in range(p - 1, -1, -1):
        v = theta[j]
        for t in range(j + 1, p):
            v -= L[t, j] * theta[t]
        theta[j] = v / L[j, j]
    return True


@njit(cache=True)
def _solve_minnorm(G, rhs, theta, p):
    # minimum-norm solution of the (possibly singular) normal equations
    w, V = np.linalg.eigh(G)
    wmax = w[p - 1]
    cutoff = wmax * _EIG_RCOND
    if cutoff < 1e-300:
        cutoff = 1e-300
    for j in range(p):
        theta[j] = 0.0
    for t in range(p):
        if w[t] > cutoff:
            c = 0.0
            for j in range(p):
                c += V[j, t] * rhs[j]
            c /= w[t]
            for j in range(p):
                theta[j] += V[j, t] * c
    return theta


@njit(cache=True, parallel=True)
def cv_sse(X, y, fold_ids, n_folds, subsets):
    """Pooled held-out squared error of OLS-with-bias per column subset."""
    K, N = X.shape
    S, k = subsets.shape
    p = k + 1

    Gfull = np.zeros((N + 1, N + 1))
    bfull = np.zeros(N + 1)
    Gfold = np.zeros((n_folds, N + 1, N + 1))
    bfold = np.zeros((n_folds, N + 1))
    for i in range(K):
        f = fold_ids[i]
        for a in range(N + 1):
            xa = X[i, a] if a < N else 1.0
            bfull[a] += xa * y[i]
            bfold[f, a] += xa * y[i]
            for b in range(N + 1):
                xb = X[i, b] if b < N else 1.0
                Gfull[a, b] += xa * xb
                Gfold[f, a, b] += xa * xb

    # held-out row lists per fold, CSR layout
    fold_start = np.zeros(n_folds + 1, dtype=np.int64)
    for i in range(K):
        fold_start[fold_ids[i] + 1] += 1
    for f in range(n_folds):
        fold_start[f + 1] += fold_start[f]
    fold_rows = np.empty(K, dtype=np.int64)
    cursor = fold_start[:-1].copy()
    for i in range(K):
        f = fold_ids[i]
        fold_rows[cursor[f]] = i
        cursor[f] += 1

    out = np.zeros(S)
    for s in prange(S):
        idx = np.empty(p, dtype=np.int64)
        for j in range(k):
            idx[j] = subsets[s, j]
        idx[k] = N
        Gs = np.empty((p, p))
        rhs = np.empty(p)
        L = np.empty((p, p))
        theta = np.empty(p)
        sse = 0.0
        for f in range(n_folds):
            for a in range(p):
                ia = idx[a]
                rhs[a] = bfull[ia] - bfold[f, ia]
                for b in range(p):
                    Gs[a, b] = Gfull[ia, idx[b]] - Gfold[f, ia, idx[b]]
            if not _solve_inplace(Gs, rhs, theta, L, p):
                # rebuild: the solve attempt scribbled on nothing but L/theta
                for a in range(p):
                    ia = idx[a]
                    for b in range(p):
                        Gs[a, b] = Gfull[ia, idx[b]] - Gfold[f, ia, idx[b]]
                _solve_minnorm(Gs, rhs, theta, p)
            for r in range(fold_start[f], fold_start[f + 1]):
                i = fold_rows[r]
                pred = theta[k]
                for j in range(k):
                    pred += theta[j] * X[i, subsets[s, j]]
                d = pred - y[i]
                sse += d * d
        out[s] = sse
    return out


@njit(cache=True, parallel=True)
def train_sse(X, y, subsets):
    """Full-data training squared error of OLS-with-bias per column subset."""
    K, N = X.shape
    S, k = subsets.shape
    p = k + 1

    Gfull = np.zeros((N + 1, N + 1))
    bfull = np.zeros(N + 1)
    for i in range(K):
        for a in range(N + 1):
            xa = X[i, a] if a < N else 1.0
            bfull[a] += xa * y[i]
            for b in range(N + 1):
                xb = X[i, b] if b < N else 1.0
                Gfull[a, b] += xa * xb

    out = np.zeros(S)
    for s in prange(S):
        idx = np.empty(p, dtype=np.int64)
        for j in range(k):
            idx[j] = subsets[s, j]
        idx[k] = N
        Gs = np.empty((p, p))
        rhs = np.empty(p)
        L = np.empty((p, p))
        theta = np.empty(p)
        for a in range(p):
            ia = idx[a]
            rhs[a] = bfull[ia]
            for b in range(p):
                Gs[a, b] = Gfull[ia, idx[b]]
        if not _solve_inplace(Gs, rhs, theta, L, p):
            for a in range(p):
                ia = idx[a]
                for b in range(p):
                    Gs[a, b] = Gfull[ia, idx[b]]
            _solve_minnorm(Gs, rhs, theta, p)
        sse = 0.0
        for i in range(K):
            pred = theta[k]
            for j in range(k):
                pred += theta[j] * X[i, subsets[s, j]]
            d = pred - y[i]
            sse += d * d
        out[s] = sse
    return out
