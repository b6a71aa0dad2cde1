"""Compiled classifier kernels for the probing battery.

No kernel draws random numbers: shuffles, bootstrap rows, per-node feature
subsets and initial weights are all drawn by the caller and passed in, so the
numpy fallback consumes identical streams and thread count cannot matter.
Trees assign node ids in creation order (root 0, then children as splits
happen, right pushed before left) and break score ties toward the earliest
candidate in scan order, which pins identical structure across backends.
"""

import numpy as np
from numba import njit, prange


@njit(cache=True)
def _softmax_rows(Z):
    n, c = Z.shape
    P = np.empty((n, c))
    for i in range(n):
        m = Z[i, 0]
        for j in range(1, c):
            if Z[i, j] > m:
                m = Z[i, j]
        s = 0.0
        for j in range(c):
            P[i, j] = np.exp(Z[i, j] - m)
            s += P[i, j]
        for j in range(c):
            P[i, j] /= s
    return P


@njit(cache=True)
def logreg_loss_grad(W, b, X, y, n_classes, l2):
    """Mean cross-entropy with L2 on weights (bias free) and its gradient."""
    n, d = X.shape
    Z = np.dot(X, W)
    for i in range(n):
        for j in range(n_classes):
            Z[i, j] += b[j]
    P = _softmax_rows(Z)
    loss = 0.0
    for i in range(n):
        p = P[i, y[i]]
        if p < 1e-300:
            p = 1e-300
        loss -= np.log(p)
    loss /= n
    for a in range(d):
        for j in range(n_classes):
            loss += 0.5 * l2 * W[a, j] * W[a, j]
    E = P
    for i in range(n):
        E[i, y[i]] -= 1.0
    GW = np.dot(X.T, np.ascontiguousarray(E))
    Gb = np.zeros(n_classes)
    for a in range(d):
        for j in range(n_classes):
            GW[a, j] = GW[a, j] / n + l2 * W[a, j]
    for i in range(n):
        for j in range(n_classes):
            Gb[j] += E[i, j]
    for j in range(n_classes):
        Gb[j] /= n
    return loss, GW, Gb


@njit(cache=True)
def logreg_fit(X, y, n_classes, l2, lr, epochs, tol):
    """Full-batch gradient descent from zero init; stops at gradient norm tol."""
    n, d = X.shape
    W = np.zeros((d, n_classes))
    b = np.zeros(n_classes)
    for _ in range(epochs):
        _, GW, Gb = logreg_loss_grad(W, b, X, y, n_classes, l2)
        gmax = 0.0
        for a in range(d):
            for j in range(n_classes):
                if abs(GW[a, j]) > gmax:
                    gmax = abs(GW[a, j])
        for j in range(n_classes):
            if abs(Gb[j]) > gmax:
                gmax = abs(Gb[j])
        if gmax <= tol:
            break
        for a in range(d):
            for j in range(n_classes):
                W[a, j] -= lr * GW[a, j]
        for j in range(n_classes):
            b[j] -= lr * Gb[j]
    return W, b


@njit(cache=True)
def linear_predict(W, b, X):
    n = X.shape[0]
    c = W.shape[1]
    Z = np.dot(X, W)
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        best = Z[i, 0] + b[0]
        arg = 0
        for j in range(1, c):
            v = Z[i, j] + b[j]
            if v > best:
                best = v
                arg = j
        out[i] = arg
    return out


@njit(cache=True)
def svm_fit(X, y, n_classes, l2, lr0, epochs):
    """One-vs-rest linear hinge, deterministic full-batch subgradient descent."""
    n, d = X.shape
    W = np.zeros((d, n_classes))
    b = np.zeros(n_classes)
    GW = np.empty((d, n_classes))
    Gb = np.empty(n_classes)
    for t in range(1, epochs + 1):
        lr = lr0 / (1.0 + lr0 * l2 * t)
        Z = np.dot(X, W)
        for a in range(d):
            for j in range(n_classes):
                GW[a, j] = l2 * W[a, j]
        for j in range(n_classes):
            Gb[j] = 0.0
        for i in range(n):
            for j in range(n_classes):
                s = 1.0 if y[i] == j else -1.0
                if s * (Z[i, j] + b[j]) < 1.0:
                    for a in range(d):
                        GW[a, j] -= s * X[i, a] / n
                    Gb[j] -= s / n
        for a in range(d):
            for j in range(n_classes):
                W[a, j] -= lr * GW[a, j]
        for j in range(n_classes):
            b[j] -= lr * Gb[j]
    return W, b


@njit(cache=True)
def mlp_loss_grad(W1, b1, W2, b2, X, y, n_classes, l2):
    """Full-batch loss and gradients of the one-hidden-layer relu network."""
    n, d = X.shape
    h = W1.shape[1]
    A = np.dot(X, W1)
    for i in range(n):
        for j in range(h):
            A[i, j] += b1[j]
            if A[i, j] < 0.0:
                A[i, j] = 0.0
    Z = np.dot(A, W2)
    for i in range(n):
        for j in range(n_classes):
            Z[i, j] += b2[j]
    P = _softmax_rows(Z)
    loss = 0.0
    for i in range(n):
        p = P[i, y[i]]
        if p < 1e-300:
            p = 1e-300
        loss -= np.log(p)
    loss /= n
    for a in range(d):
        for j in range(h):
            loss += 0.5 * l2 * W1[a, j] * W1[a, j]
    for a in range(h):
        for j in range(n_classes):
            loss += 0.5 * l2 * W2[a, j] * W2[a, j]
    E = P
    for i in range(n):
        E[i, y[i]] -= 1.0
        for j in range(n_classes):
            E[i, j] /= n
    GW2 = np.dot(A.T, np.ascontiguousarray(E))
    Gb2 = np.zeros(n_classes)
    for i in range(n):
        for j in range(n_classes):
            Gb2[j] += E[i, j]
    D = np.dot(E, W2.T)
    for i in range(n):
        for j in range(h):
            if A[i, j] <= 0.0:
                D[i, j] = 0.0
    GW1 = np.dot(X.T, np.ascontiguousarray(D))
    Gb1 = np.zeros(h)
    for i in range(n):
        for j in range(h):
            Gb1[j] += D[i, j]
    for a in range(d):
        for j in range(h):
            GW1[a, j] += l2 * W1[a, j]
    for a in range(h):
        for j in range(n_classes):
            GW2[a, j] += l2 * W2[a, j]
    return loss, GW1, Gb1, GW2, Gb2


@njit(cache=True)
def mlp_fit(X, y, n_classes, l2, lr, epochs, batch, perm, W1, b1, W2, b2):
    """Adam on minibatches in the caller-supplied order; weights updated in place."""
    n, d = X.shape
    h = W1.shape[1]
    mW1 = np.zeros((d, h))
    vW1 = np.zeros((d, h))
    mb1 = np.zeros(h)
    vb1 = np.zeros(h)
    mW2 = np.zeros((h, n_classes))
    vW2 = np.zeros((h, n_classes))
    mb2 = np.zeros(n_classes)
    vb2 = np.zeros(n_classes)
    beta1 = 0.9
    beta2 = 0.999
    eps = 1e-8
    t = 0
    for e in range(epochs):
        for lo in range(0, n, batch):
            hi = min(lo + batch, n)
            idx = perm[e, lo:hi]
            Xb = X[idx]
            yb = y[idx]
            _, GW1, Gb1, GW2, Gb2 = mlp_loss_grad(W1, b1, W2, b2, Xb, yb, n_classes, l2)
            t += 1
            c1 = 1.0 - beta1**t
            c2 = 1.0 - beta2**t
            for a in range(d):
                for j in range(h):
                    mW1[a, j] = beta1 * mW1[a, j] + (1 - beta1) * GW1[a, j]
                    vW1[a, j] = beta2 * vW1[a, j] + (1 - beta2) * GW1[a, j] * GW1[a, j]
                    W1[a, j] -= lr * (mW1[a, j] / c1) / (np.sqrt(vW1[a, j] / c2) + eps)
            for j in range(h):
                mb1[j] = beta1 * mb1[j] + (1 - beta1) * Gb1[j]
                vb1[j] = beta2 * vb1[j] + (1 - beta2) * Gb1[j] * Gb1[j]
                b1[j] -= lr * (mb1[j] / c1) / (np.sqrt(vb1[j] / c2) + eps)
            for a in range(h):
                for j in range(n_classes):
                    mW2[a, j] = beta1 * mW2[a, j] + (1 - beta1) * GW2[a, j]
                    vW2[a, j] = beta2 * vW2[a, j] + (1 - beta2) * GW2[a, j] * GW2[a, j]
                    W2[a, j] -= lr * (mW2[a, j] / c1) / (np.sqrt(vW2[a, j] / c2) + eps)
            for j in range(n_classes):
                mb2[j] = beta1 * mb2[j] + (1 - beta1) * Gb2[j]
                vb2[j] = beta2 * vb2[j] + (1 - beta2) * Gb2[j] * Gb2[j]
                b2[j] -= lr * (mb2[j] / c1) / (np.sqrt(vb2[j] / c2) + eps)
    return W1, b1, W2, b2


@njit(cache=True)
def mlp_predict(W1, b1, W2, b2, X):
    n = X.shape[0]
    h = W1.shape[1]
    c = W2.shape[1]
    A = np.dot(X, W1)
    for i in range(n):
        for j in range(h):
            A[i, j] += b1[j]
            if A[i, j] < 0.0:
                A[i, j] = 0.0
    Z = np.dot(A, W2)
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        best = Z[i, 0] + b2[0]
        arg = 0
        for j in range(1, c):
            v = Z[i, j] + b2[j]
            if v > best:
                best = v
                arg = j
        out[i] = arg
    return out


@njit(cache=True)
def tree_fit(X, y, n_classes, rows, feat_sets):
    """Grow a CART tree (gini, to purity, leaves >= 1 sample) on the given rows.

    feat_sets[node_id] lists the candidate features for that node's split.
    Returns parallel node arrays; feature -1 marks a leaf.
    """
    n = rows.shape[0]
    max_nodes = 2 * n + 1
    feature = np.full(max_nodes, -1, dtype=np.int64)
    thresh = np.zeros(max_nodes)
    left = np.full(max_nodes, -1, dtype=np.int64)
    right = np.full(max_nodes, -1, dtype=np.int64)
    leaf = np.zeros(max_nodes, dtype=np.int64)
    work = rows.copy()

    stack_node = np.empty(max_nodes, dtype=np.int64)
    stack_lo = np.empty(max_nodes, dtype=np.int64)
    stack_hi = np.empty(max_nodes, dtype=np.int64)
    top = 0
    stack_node[0] = 0
    stack_lo[0] = 0
    stack_hi[0] = n
    top = 1
    n_nodes = 1

    counts = np.empty(n_classes, dtype=np.int64)
    left_counts = np.empty(n_classes, dtype=np.int64)

    while top > 0:
        top -= 1
        node = stack_node[top]
        lo = stack_lo[top]
        hi = stack_hi[top]
        m = hi - lo

        for j in range(n_classes):
            counts[j] = 0
        for r in range(lo, hi):
            counts[y[work[r]]] += 1
        best_cls = 0
        for j in range(1, n_classes):
            if counts[j] > counts[best_cls]:
                best_cls = j
        leaf[node] = best_cls
        pure = counts[best_cls] == m
        if pure or m < 2:
            continue

        cand = feat_sets[node]
        best_score = np.inf
        best_feat = -1
        best_thresh = 0.0
        vals = np.empty(m)
        for ci in range(cand.shape[0]):
            f = cand[ci]
            for r in range(m):
                vals[r] = X[work[lo + r], f]
            order = np.argsort(vals, kind="mergesort")
            for j in range(n_classes):
                left_counts[j] = 0
            for pos in range(m - 1):
                row = work[lo + order[pos]]
                left_counts[y[row]] += 1
                if vals[order[pos + 1]] <= vals[order[pos]]:
                    continue
                nl = pos + 1
                nr = m - nl
                sl = 0.0
                sr = 0.0
                for j in range(n_classes):
                    cl = left_counts[j]
                    cr = counts[j] - cl
                    sl += cl * cl
                    sr += cr * cr
                gini_l = 1.0 - sl / (nl * nl)
                gini_r = 1.0 - sr / (nr * nr)
                score = (nl * gini_l + nr * gini_r) / m
                if score < best_score:
                    best_score = score
                    best_feat = f
                    best_thresh = 0.5 * (vals[order[pos]] + vals[order[pos + 1]])
        if best_feat < 0:
            continue  # every candidate feature constant here: stay a leaf

        # stable partition: left rows keep order, then right rows
        tmp = np.empty(m, dtype=np.int64)
        nl = 0
        for r in range(lo, hi):
            if X[work[r], best_feat] <= best_thresh:
                tmp[nl] = work[r]
                nl += 1
        nr = nl
        for r in range(lo, hi):
            if X[work[r], best_feat] > best_thresh:
                tmp[nr] = work[r]
                nr += 1
        for r in range(m):
            work[lo + r] = tmp[r]

        feature[node] = best_feat
        thresh[node] = best_thresh
        left_id = n_nodes
        right_id = n_nodes + 1
        n_nodes += 2
        left[node] = left_id
        right[node] = right_id
        stack_node[top] = right_id
        stack_lo[top] = lo + nl
        stack_hi[top] = hi
        top += 1
        stack_node[top] = left_id
        stack_lo[top] = lo
        stack_hi[top] = lo + nl
        top += 1

    return feature, thresh, left, right, leaf, n_nodes


@njit(cache=True)
def tree_predict(feature, thresh, left, right, leaf, X):
    n = X.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= thresh[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = leaf[node]
    return out


@njit(cache=True, parallel=True)
def cv_logreg_acc_cols(X, y, n_classes, fold_ids, n_folds, subsets, l2, epochs, tol):
    """Pooled CV accuracy of the logistic probe on each column subset."""
    K = X.shape[0]
    S, k = subsets.shape
    out = np.empty(S)
    for s in prange(S):
        sub = np.empty((K, k))
        for i in range(K):
            for j in range(k):
                sub[i, j] = X[i, subsets[s, j]]
        out[s] = _cv_logreg_one(sub, y, n_classes, fold_ids, n_folds, l2, epochs, tol)
    return out


@njit(cache=True, parallel=True)
def cv_logreg_acc_mats(Z, y, n_classes, fold_ids, n_folds, l2, epochs, tol):
    """Same as cv_logreg_acc_cols but on per-subset feature matrices Z[s]."""
    S = Z.shape[0]
    out = np.empty(S)
    for s in prange(S):
        out[s] = _cv_logreg_one(Z[s].copy(), y, n_classes, fold_ids, n_folds, l2, epochs, tol)
    return out


@njit(cache=True)
def _cv_logreg_one(F, y, n_classes, fold_ids, n_folds, l2, epochs, tol):
    K, k = F.shape
    correct = 0
    for f in range(n_folds):
        n_tr = 0
        for i in range(K):
            if fold_ids[i] != f:
                n_tr += 1
        Xtr = np.empty((n_tr, k))
        ytr = np.empty(n_tr, dtype=np.int64)
        pos = 0
        for i in range(K):
            if fold_ids[i] != f:
                for j in range(k):
                    Xtr[pos, j] = F[i, j]
                ytr[pos] = y[i]
                pos += 1
        # standardize on the training rows; flat columns pass through
        mu = np.empty(k)
        sd = np.empty(k)
        for j in range(k):
            s = 0.0
            for i in range(n_tr):
                s += Xtr[i, j]
            mu[j] = s / n_tr
            v = 0.0
            for i in range(n_tr):
                d = Xtr[i, j] - mu[j]
                v += d * d
            sd[j] = np.sqrt(v / n_tr)
            if sd[j] <= 1e-12:
                sd[j] = 1.0
        for i in range(n_tr):
            for j in range(k):
                Xtr[i, j] = (Xtr[i, j] - mu[j]) / sd[j]
        # unit-variance columns make trace(X^T X)/n = k, bounding the curvature
        lr = 1.0 / (0.5 * k + l2)
        W, b = logreg_fit(Xtr, ytr, n_classes, l2, lr, epochs, tol)
        for i in range(K):
            if fold_ids[i] == f:
                best = -np.inf
                arg = 0
                for c in range(n_classes):
                    z = b[c]
                    for j in range(k):
                        z += (F[i, j] - mu[j]) / sd[j] * W[j, c]
                    if z > best:
                        best = z
                        arg = c
                if arg == y[i]:
                    correct += 1
    return correct / K
