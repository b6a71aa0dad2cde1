"""Pure-numpy fallback for the exhaustive subset search.

Same contract as the numba module: per-fold augmented Gram matrices, a
batched Cholesky over all candidate subsets at once, and an eigen-based
minimum-norm rescue for the (rare) singular candidates.  Work is chunked so
the batched temporaries stay modest.
"""

import numpy as np

_PIVOT_RTOL = 1e-12
_EIG_RCOND = 1e-10
_CHUNK = 65536


def _minnorm(G, rhs):
    w, V = np.linalg.eigh(G)
    cutoff = max(w[-1] * _EIG_RCOND, 1e-300)
    inv = np.where(w > cutoff, 1.0 / np.where(w > cutoff, w, 1.0), 0.0)
    return V @ (inv * (V.T @ rhs))


def _chol_solve_batch(G, rhs):
    # vectorized Cholesky over the batch; bad pivots are masked and redone
    S, p, _ = G.shape
    L = np.zeros_like(G)
    ok = np.ones(S, dtype=bool)
    for j in range(p):
        d = G[:, j, j] - np.einsum("st,st->s", L[:, j, :j], L[:, j, :j])
        floor = np.maximum(G[:, j, j] * _PIVOT_RTOL, 1e-30)
        bad = d <= floor
        ok &= ~bad
        d = np.where(bad, 1.0, d)
        L[:, j, j] = np.sqrt(d)
        if j + 1 < p:
            v = G[:, j + 1 :, j] - np.einsum("sit,st->si", L[:, j + 1 :, :j], L[:, j, :j])
            L[:, j + 1 :, j] = v / L[:, j, j][:, None]
    z = np.zeros((S, p))
    for j in range(p):
        z[:, j] = (rhs[:, j] - np.einsum("st,st->s", L[:, j, :j], z[:, :j])) / L[:, j, j]
    theta = np.zeros((S, p))
    for j in range(p - 1, -1, -1):
        theta[:, j] = (z[:, j] - np.einsum("st,st->s", L[:, j + 1 :, j], theta[:, j + 1 :])) / L[:, j, j]
    for s in np.flatnonzero(~ok):
        theta[s] = _minnorm(G[s], rhs[s])
    return theta


def cv_sse(X, y, fold_ids, n_folds, subsets):
    """Pooled held-out squared error of OLS-with-bias per column subset."""
    K, N = X.shape
    S, k = subsets.shape
    A = np.hstack([X, np.ones((K, 1))])
    aug = np.hstack([subsets, np.full((S, 1), N, dtype=subsets.dtype)])
    out = np.zeros(S)
    folds = []
    for f in range(n_folds):
        te = fold_ids == f
        tr = ~te
        Atr = A[tr]
        folds.append((A[te], y[te], Atr.T @ Atr, Atr.T @ y[tr]))
    for lo in range(0, S, _CHUNK):
        sl = aug[lo : lo + _CHUNK]
        for Ate, yte, Gtr, btr in folds:
            Gs = Gtr[sl[:, :, None], sl[:, None, :]]
            rhs = btr[sl]
            theta = _chol_solve_batch(Gs, rhs)
            pred = np.einsum("tsp,sp->ts", Ate[:, sl], theta)
            out[lo : lo + sl.shape[0]] += ((pred - yte[:, None]) ** 2).sum(axis=0)
    return out


def train_sse(X, y, subsets):
    """Full-data training squared error of OLS-with-bias per column subset."""
    K, N = X.shape
    S, k = subsets.shape
    A = np.hstack([X, np.ones((K, 1))])
    aug = np.hstack([subsets, np.full((S, 1), N, dtype=subsets.dtype)])
    G = A.T @ A
    b = A.T @ y
    out = np.zeros(S)
    for lo in range(0, S, _CHUNK):
        sl = aug[lo : lo + _CHUNK]
        Gs = G[sl[:, :, None], sl[:, None, :]]
        rhs = b[sl]
        theta = _chol_solve_batch(Gs, rhs)
        pred = np.einsum("tsp,sp->ts", A[:, sl], theta)
        out[lo : lo + sl.shape[0]] += ((pred - y[:, None]) ** 2).sum(axis=0)
    return out
