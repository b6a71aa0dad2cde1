"""Pure-numpy fallback for the probing battery kernels.

Mirrors the numba module exactly: same caller-supplied randomness, same
schedules, and for trees the same scan order, tie-breaks and integer count
arithmetic, so both backends grow identical trees.  Iterative trainers may
differ from the compiled path at roundoff level only.
"""

import numpy as np


def _softmax_rows(Z):
    Z = Z - Z.max(axis=1, keepdims=True)
    P = np.exp(Z)
    P /= P.sum(axis=1, keepdims=True)
    return P


def logreg_loss_grad(W, b, X, y, n_classes, l2):
    n = X.shape[0]
    P = _softmax_rows(X @ W + b)
    picked = np.maximum(P[np.arange(n), y], 1e-300)
    loss = -np.log(picked).mean() + 0.5 * l2 * np.sum(W * W)
    E = P
    E[np.arange(n), y] -= 1.0
    GW = X.T @ E / n + l2 * W
    Gb = E.mean(axis=0)
    return loss, GW, Gb


def logreg_fit(X, y, n_classes, l2, lr, epochs, tol):
    d = X.shape[1]
    W = np.zeros((d, n_classes))
    b = np.zeros(n_classes)
    for _ in range(epochs):
        _, GW, Gb = logreg_loss_grad(W, b, X, y, n_classes, l2)
        if max(np.abs(GW).max(), np.abs(Gb).max()) <= tol:
            break
        W -= lr * GW
        b -= lr * Gb
    return W, b


def linear_predict(W, b, X):
    return np.argmax(X @ W + b, axis=1).astype(np.int64)


def svm_fit(X, y, n_classes, l2, lr0, epochs):
    n, d = X.shape
    W = np.zeros((d, n_classes))
    b = np.zeros(n_classes)
    sign = np.where(y[:, None] == np.arange(n_classes)[None, :], 1.0, -1.0)
    for t in range(1, epochs + 1):
        lr = lr0 / (1.0 + lr0 * l2 * t)
        viol = sign * (X @ W + b) < 1.0
        act = np.where(viol, sign, 0.0)
        GW = l2 * W - X.T @ act / n
        Gb = -act.sum(axis=0) / n
        W -= lr * GW
        b -= lr * Gb
    return W, b


def mlp_loss_grad(W1, b1, W2, b2, X, y, n_classes, l2):
    n = X.shape[0]
    A = np.maximum(X @ W1 + b1, 0.0)
    P = _softmax_rows(A @ W2 + b2)
    picked = np.maximum(P[np.arange(n), y], 1e-300)
    loss = -np.log(picked).mean() + 0.5 * l2 * (np.sum(W1 * W1) + np.sum(W2 * W2))
    E = P
    E[np.arange(n), y] -= 1.0
    E /= n
    GW2 = A.T @ E + l2 * W2
    Gb2 = E.sum(axis=0)
    D = E @ W2.T
    D[A <= 0.0] = 0.0
    GW1 = X.T @ D + l2 * W1
    Gb1 = D.sum(axis=0)
    return loss, GW1, Gb1, GW2, Gb2


def mlp_fit(X, y, n_classes, l2, lr, epochs, batch, perm, W1, b1, W2, b2):
    n = X.shape[0]
    state = [np.zeros_like(p) for p in (W1, b1, W2, b2)] + [np.zeros_like(p) for p in (W1, b1, W2, b2)]
    mW1, mb1, mW2, mb2, vW1, vb1, vW2, vb2 = state
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    t = 0
    params = (W1, b1, W2, b2)
    moments = ((mW1, vW1), (mb1, vb1), (mW2, vW2), (mb2, vb2))
    for e in range(epochs):
        for lo in range(0, n, batch):
            idx = perm[e, lo : lo + batch]
            _, GW1, Gb1, GW2, Gb2 = mlp_loss_grad(W1, b1, W2, b2, X[idx], y[idx], n_classes, l2)
            t += 1
            c1 = 1.0 - beta1**t
            c2 = 1.0 - beta2**t
            for p, (m, v), g in zip(params, moments, (GW1, Gb1, GW2, Gb2)):
                m *= beta1
                m += (1 - beta1) * g
                v *= beta2
                v += (1 - beta2) * g * g
                p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return W1, b1, W2, b2


def mlp_predict(W1, b1, W2, b2, X):
    A = np.maximum(X @ W1 + b1, 0.0)
    return np.argmax(A @ W2 + b2, axis=1).astype(np.int64)


def tree_fit(X, y, n_classes, rows, feat_sets):
    n = rows.shape[0]
    max_nodes = 2 * n + 1
    feature = np.full(max_nodes, -1, dtype=np.int64)
    thresh = np.zeros(max_nodes)
    left = np.full(max_nodes, -1, dtype=np.int64)
    right = np.full(max_nodes, -1, dtype=np.int64)
    leaf = np.zeros(max_nodes, dtype=np.int64)
    work = rows.copy()
    class_ids = np.arange(n_classes)

    stack = [(0, 0, n)]
    n_nodes = 1
    while stack:
        node, lo, hi = stack.pop()
        m = hi - lo
        seg = work[lo:hi]
        labels = y[seg]
        counts = np.bincount(labels, minlength=n_classes).astype(np.int64)
        leaf[node] = int(np.argmax(counts))
        if counts[leaf[node]] == m or m < 2:
            continue

        best_score = np.inf
        best_feat = -1
        best_thresh = 0.0
        for f in feat_sets[node]:
            vals = X[seg, f]
            order = np.argsort(vals, kind="mergesort")
            sv = vals[order]
            boundary = sv[1:] > sv[:-1]
            if not boundary.any():
                continue
            oh = (labels[order][:-1, None] == class_ids).astype(np.int64)
            cum = np.cumsum(oh, axis=0)
            sl = np.sum(cum * cum, axis=1).astype(np.float64)
            rest = counts[None, :] - cum
            sr = np.sum(rest * rest, axis=1).astype(np.float64)
            nl = np.arange(1, m, dtype=np.int64)
            nr = m - nl
            gini_l = 1.0 - sl / (nl * nl)
            gini_r = 1.0 - sr / (nr * nr)
            score = np.where(boundary, (nl * gini_l + nr * gini_r) / m, np.inf)
            pos = int(np.argmin(score))
            if score[pos] < best_score:
                best_score = float(score[pos])
                best_feat = int(f)
                best_thresh = 0.5 * (sv[pos] + sv[pos + 1])
        if best_feat < 0:
            continue

        go_left = X[seg, best_feat] <= best_thresh
        ordered = np.concatenate([seg[go_left], seg[~go_left]])
        nl = int(go_left.sum())
        work[lo:hi] = ordered

        feature[node] = best_feat
        thresh[node] = best_thresh
        left_id, right_id = n_nodes, n_nodes + 1
        n_nodes += 2
        left[node] = left_id
        right[node] = right_id
        stack.append((right_id, lo + nl, hi))
        stack.append((left_id, lo, lo + nl))

    return feature, thresh, left, right, leaf, n_nodes


def tree_predict(feature, thresh, left, right, leaf, X):
    n = X.shape[0]
    node = np.zeros(n, dtype=np.int64)
    active = feature[node] >= 0
    while active.any():
        idx = np.flatnonzero(active)
        cur = node[idx]
        goes_left = X[idx, feature[cur]] <= thresh[cur]
        node[idx] = np.where(goes_left, left[cur], right[cur])
        active = feature[node] >= 0
    return leaf[node]


def _cv_logreg_one(F, y, n_classes, fold_ids, n_folds, l2, epochs, tol):
    K, k = F.shape
    correct = 0
    for f in range(n_folds):
        tr = fold_ids != f
        Xtr = F[tr]
        mu = Xtr.mean(axis=0)
        sd = np.sqrt(((Xtr - mu) ** 2).mean(axis=0))
        sd = np.where(sd <= 1e-12, 1.0, sd)
        lr = 1.0 / (0.5 * k + l2)
        W, b = logreg_fit((Xtr - mu) / sd, y[tr], n_classes, l2, lr, epochs, tol)
        te = ~tr
        pred = linear_predict(W, b, (F[te] - mu) / sd)
        correct += int((pred == y[te]).sum())
    return correct / K


def cv_logreg_acc_cols(X, y, n_classes, fold_ids, n_folds, subsets, l2, epochs, tol):
    S = subsets.shape[0]
    out = np.empty(S)
    for s in range(S):
        out[s] = _cv_logreg_one(X[:, subsets[s]], y, n_classes, fold_ids, n_folds, l2, epochs, tol)
    return out


def cv_logreg_acc_mats(Z, y, n_classes, fold_ids, n_folds, l2, epochs, tol):
    S = Z.shape[0]
    out = np.empty(S)
    for s in range(S):
        out[s] = _cv_logreg_one(Z[s], y, n_classes, fold_ids, n_folds, l2, epochs, tol)
    return out
