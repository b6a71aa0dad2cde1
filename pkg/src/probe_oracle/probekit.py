"""The probing battery: seven classifiers per dataset, best picked on dev.

Each classifier trains on the (optionally subsampled) train split, is scored
on dev and test, and the battery reports every per-method accuracy plus the
test accuracy of the dev-best method.  All randomness (subsampling, inits,
shuffles, bootstraps, per-node feature subsets) is drawn outside the compute
kernels from streams keyed by (seed, model, task, layer, method), so results
do not depend on evaluation order or thread count.
"""

import math

from dataclasses import dataclass

import numpy as np

from . import backend, seeding
from .datamodel import CLASSIFIER_METHODS, FeatureId, ProbeMatrix, ProbeMethod
from .errors import InsufficientSamples, MissingCell, ValueOutOfRange

_L2 = 1e-4
_LOGREG_EPOCHS = 200
_LOGREG_TOL = 1e-6
_MLP_LR = 0.01
_MLP_EPOCHS = 100
_MLP_BATCH = 32
_SVM_LR0 = 1.0
_SVM_EPOCHS = 200


@dataclass(frozen=True)
class ClassifierRecord:
    method: ProbeMethod
    dev_accuracy: float
    test_accuracy: float
    hyperparameters: dict


@dataclass(frozen=True)
class ProbeOutcome:
    records: tuple
    best: ProbeMethod
    best_dev_accuracy: float
    best_test_accuracy: float

    def record(self, method):
        for r in self.records:
            if r.method is method:
                return r
        raise ValueOutOfRange(f"no record for method {method.value}")


def _subsample_split(x, y, per_class, n_classes, gen):
    keep = []
    for c in range(n_classes):
        idx = np.flatnonzero(y == c)
        if idx.size > per_class:
            pick = gen.choice(idx.size, size=per_class, replace=False)
            idx = idx[np.sort(pick)]
        keep.append(idx)
    keep = np.sort(np.concatenate(keep))
    return x[keep], y[keep]


def _prepare(ds, cfg, model_token, task, layer):
    """Subsample per split, cast to float64, standardize on train stats."""
    out = {}
    for split in ("train", "dev", "test"):
        x, y = ds.split(split)
        if split == "train":
            counts = np.bincount(y, minlength=ds.class_count)
            short = [c for c in range(ds.class_count) if counts[c] < cfg.samples_per_class]
            if short:
                raise InsufficientSamples(
                    f"train split has fewer than {cfg.samples_per_class} samples for classes {short}"
                )
        if x.shape[0] == 0:
            raise InsufficientSamples(f"{split} split is empty")
        gen = seeding.generator(cfg.seed, seeding.SUBSAMPLE, model_token, task, layer, split)
        x, y = _subsample_split(x, y, cfg.samples_per_class, ds.class_count, gen)
        out[split] = (np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.int64))
    (xtr, ytr) = out["train"]
    mu = xtr.mean(axis=0)
    sd = xtr.std(axis=0)
    sd = np.where(sd <= 1e-12, 1.0, sd)
    for split in out:
        x, y = out[split]
        out[split] = (np.ascontiguousarray((x - mu) / sd), y)
    return out


def _accuracy(pred, y):
    return float((pred == y).mean())


def _curvature_lr(xtr, l2):
    # 1 / (0.5 * lambda_max(X^T X) / n + l2), lambda_max by power iteration
    n, d = xtr.shape
    v = np.full(d, 1.0 / math.sqrt(d))
    lam = 1.0
    for _ in range(64):
        w = xtr.T @ (xtr @ v) / n
        lam = float(np.linalg.norm(w))
        if lam <= 1e-30:
            return 1.0 / l2 if l2 > 0 else 1.0
        v = w / lam
    return 1.0 / (0.5 * lam + l2)


def _fit_forest(kern, xtr, ytr, n_classes, n_trees, gen):
    n, d = xtr.shape
    mtry = math.ceil(math.sqrt(d))
    max_nodes = 2 * n + 1
    trees = []
    for _ in range(n_trees):
        rows = np.sort(gen.integers(0, n, size=n)).astype(np.int64)
        if mtry >= d:
            feat_sets = np.ascontiguousarray(np.broadcast_to(np.arange(d, dtype=np.int64), (max_nodes, d)))
        else:
            scores = gen.random((max_nodes, d))
            feat_sets = np.sort(np.argpartition(scores, mtry, axis=1)[:, :mtry]).astype(np.int64)
            feat_sets = np.ascontiguousarray(feat_sets)
        trees.append(kern.tree_fit(xtr, ytr, n_classes, rows, feat_sets))
    return trees, mtry


def _forest_predict(kern, trees, n_classes, x):
    votes = np.zeros((x.shape[0], n_classes), dtype=np.int64)
    for feature, thresh, left, right, leaf, _ in trees:
        pred = kern.tree_predict(feature, thresh, left, right, leaf, x)
        votes[np.arange(x.shape[0]), pred] += 1
    return np.argmax(votes, axis=1).astype(np.int64)


def train_classifier(ds, method, cfg, model=None, task="", layer=0):
    """Train one battery member and score it on dev and test."""
    if method is ProbeMethod.BEST_BY_DEV:
        raise ValueOutOfRange("BestByDev is an aggregate, not a trainable method")
    model_token = model.render() if model is not None else ""
    data = _prepare(ds, cfg, model_token, task, layer)
    xtr, ytr = data["train"]
    xdev, ydev = data["dev"]
    xte, yte = data["test"]
    C = ds.class_count
    kern = backend.probes_kernels()
    gen = seeding.generator(cfg.seed, seeding.BATTERY, model_token, task, layer, method.value)

    if method is ProbeMethod.LOGREG:
        lr = _curvature_lr(xtr, _L2)
        W, b = kern.logreg_fit(xtr, ytr, C, _L2, lr, _LOGREG_EPOCHS, _LOGREG_TOL)
        dev = _accuracy(kern.linear_predict(W, b, xdev), ydev)
        test = _accuracy(kern.linear_predict(W, b, xte), yte)
        hp = {"l2": _L2, "lr": lr, "epochs": _LOGREG_EPOCHS, "tol": _LOGREG_TOL, "standardize": True}
    elif method in (ProbeMethod.MLP10, ProbeMethod.MLP20):
        hidden = 10 if method is ProbeMethod.MLP10 else 20
        n, d = xtr.shape
        W1 = gen.standard_normal((d, hidden)) * math.sqrt(2.0 / d)
        b1 = np.zeros(hidden)
        W2 = gen.standard_normal((hidden, C)) * math.sqrt(2.0 / hidden)
        b2 = np.zeros(C)
        perm = np.empty((_MLP_EPOCHS, n), dtype=np.int64)
        for e in range(_MLP_EPOCHS):
            perm[e] = gen.permutation(n)
        W1, b1, W2, b2 = kern.mlp_fit(xtr, ytr, C, _L2, _MLP_LR, _MLP_EPOCHS, _MLP_BATCH, perm, W1, b1, W2, b2)
        dev = _accuracy(kern.mlp_predict(W1, b1, W2, b2, xdev), ydev)
        test = _accuracy(kern.mlp_predict(W1, b1, W2, b2, xte), yte)
        hp = {
            "hidden": hidden, "lr": _MLP_LR, "l2": _L2, "epochs": _MLP_EPOCHS,
            "batch": _MLP_BATCH, "adam": (0.9, 0.999, 1e-8), "standardize": True,
        }
    elif method is ProbeMethod.SVM:
        W, b = kern.svm_fit(xtr, ytr, C, _L2, _SVM_LR0, _SVM_EPOCHS)
        dev = _accuracy(kern.linear_predict(W, b, xdev), ydev)
        test = _accuracy(kern.linear_predict(W, b, xte), yte)
        hp = {"l2": _L2, "lr0": _SVM_LR0, "epochs": _SVM_EPOCHS, "standardize": True}
    elif method is ProbeMethod.DECISION_TREE:
        n, d = xtr.shape
        rows = np.arange(n, dtype=np.int64)
        feat_sets = np.ascontiguousarray(np.broadcast_to(np.arange(d, dtype=np.int64), (2 * n + 1, d)))
        tree = kern.tree_fit(xtr, ytr, C, rows, feat_sets)
        feature, thresh, left, right, leaf, _ = tree
        dev = _accuracy(kern.tree_predict(feature, thresh, left, right, leaf, xdev), ydev)
        test = _accuracy(kern.tree_predict(feature, thresh, left, right, leaf, xte), yte)
        hp = {"criterion": "gini", "grown_to": "purity", "min_leaf": 1, "standardize": True}
    elif method in (ProbeMethod.RANDOM_FOREST_10, ProbeMethod.RANDOM_FOREST_100):
        n_trees = 10 if method is ProbeMethod.RANDOM_FOREST_10 else 100
        trees, mtry = _fit_forest(kern, xtr, ytr, C, n_trees, gen)
        dev = _accuracy(_forest_predict(kern, trees, C, xdev), ydev)
        test = _accuracy(_forest_predict(kern, trees, C, xte), yte)
        hp = {
            "trees": n_trees, "bootstrap": True, "mtry": mtry,
            "criterion": "gini", "grown_to": "purity", "min_leaf": 1, "standardize": True,
        }
    else:  # pragma: no cover
        raise ValueOutOfRange(f"unhandled method {method}")
    return ClassifierRecord(method=method, dev_accuracy=dev, test_accuracy=test, hyperparameters=hp)


def run_battery(ds, cfg, model=None, task="", layer=0):
    """All seven classifiers on one dataset; best by dev accuracy.

    Dev ties break toward the earlier method in the fixed battery order.
    """
    records = tuple(train_classifier(ds, m, cfg, model, task, layer) for m in CLASSIFIER_METHODS)
    best = records[0]
    for r in records[1:]:
        if r.dev_accuracy > best.dev_accuracy:
            best = r
    return ProbeOutcome(
        records=records,
        best=best.method,
        best_dev_accuracy=best.dev_accuracy,
        best_test_accuracy=best.test_accuracy,
    )


def build_probe_matrix(datasets, cfg):
    """Probe matrix over {(model, probing task, layer): dataset}.

    Emits one column per (task, layer, method) plus the BestByDev column for
    each (task, layer).  Every model must cover the same (task, layer) grid.
    """
    triples = sorted(set(datasets))
    models = sorted({m for m, _, _ in triples}, key=lambda m: (m.name, m.variant, m.family))
    grid = sorted({(t, l) for _, t, l in triples})
    for m in models:
        for t, l in grid:
            if (m, t, l) not in datasets:
                raise MissingCell(f"no dataset for model {m.render()}, task {t}, layer {l}")

    features = []
    for t, l in grid:
        features.append(FeatureId(t, l, ProbeMethod.BEST_BY_DEV))
        for meth in CLASSIFIER_METHODS:
            features.append(FeatureId(t, l, meth))
    values = np.empty((len(models), len(features)))
    for i, m in enumerate(models):
        col = 0
        for t, l in grid:
            outcome = run_battery(datasets[(m, t, l)], cfg, m, t, l)
            values[i, col] = outcome.best_test_accuracy
            col += 1
            for meth in CLASSIFIER_METHODS:
                values[i, col] = outcome.record(meth).test_accuracy
                col += 1
    return ProbeMatrix(models, features, values)
