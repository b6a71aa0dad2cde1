"""Synthetic studies and embedding sets with known ground truth.

Planted studies hide a sparse linear rule inside a probe matrix so recovery
can be graded exactly.  Embedding generators produce linearly separable,
XOR-shaped, or signal-free vector sets for exercising the classifier battery.
`oracle_ols` is a deliberately separate conjugate-gradient least-squares
solver kept around as an independent cross-check of the closed-form path.
"""

import math
from dataclasses import dataclass

import numpy as np

from .datamodel import EmbeddingDataset, FeatureId, ModelId, ProbeMatrix, ScoreTable
from .errors import DegenerateData, NonConvergence, ValueOutOfRange
from .seeding import SYNTH, generator

_LAYERS_PER_TASK = 12
_SCORE_LO = 0.55
_SCORE_HI = 0.95


def _grid(n_models, n_features):
    if n_models < 3:
        raise ValueOutOfRange(f"need at least 3 models, got {n_models}")
    if n_features < 1:
        raise ValueOutOfRange(f"need at least 1 feature, got {n_features}")
    models = tuple(ModelId(f"M{i:02d}") for i in range(n_models))
    features = []
    task = 0
    while len(features) < n_features:
        for layer in range(1, _LAYERS_PER_TASK + 1):
            features.append(FeatureId(f"P{task}", layer))
            if len(features) == n_features:
                break
        task += 1
    return models, tuple(features)


@dataclass(frozen=True)
class SynthStudy:
    pm: ProbeMatrix
    st: ScoreTable
    truth: dict

    def truth_obj(self):
        return self.truth


def gen_planted_study(seed=0, n_models=25, n_features=84, k_true=3,
                      noise_sigma=0.0, n_tasks=1):
    """Probe matrix U[0.5, 1) with scores that are an exact affine function of
    k_true hidden columns, mapped into [0.55, 0.95], optionally noised then
    clipped to [0, 1]."""
    if not 1 <= k_true <= n_features:
        raise ValueOutOfRange(f"k_true must be in [1, {n_features}], got {k_true}")
    if n_tasks < 1:
        raise ValueOutOfRange(f"n_tasks must be >= 1, got {n_tasks}")
    if noise_sigma < 0:
        raise ValueOutOfRange(f"noise_sigma must be >= 0, got {noise_sigma}")
    models, features = _grid(n_models, n_features)
    X = generator(seed, SYNTH, "planted", "X").random((n_models, n_features)) * 0.5 + 0.5
    pm = ProbeMatrix(models, features, X)

    tasks = tuple(f"T{i}" for i in range(n_tasks))
    Y = np.empty((n_models, n_tasks), dtype=np.float64)
    truth_tasks = {}
    for ti, task in enumerate(tasks):
        support = np.sort(
            generator(seed, SYNTH, "planted", ti, "support").choice(
                n_features, size=k_true, replace=False
            )
        )
        wgen = generator(seed, SYNTH, "planted", ti, "weights")
        # magnitudes bounded away from zero so every planted column matters
        w = wgen.choice(np.array([-1.0, 1.0]), size=k_true) * (0.2 + 0.8 * wgen.random(k_true))
        y0 = pm.values[:, support] @ w
        lo, hi = float(y0.min()), float(y0.max())
        if hi - lo < 1e-12:
            raise DegenerateData(f"task {task}: planted response is constant")
        a = (_SCORE_HI - _SCORE_LO) / (hi - lo)
        b = _SCORE_LO - a * lo
        y = a * y0 + b
        clipped = 0
        if noise_sigma > 0:
            y = y + noise_sigma * generator(seed, SYNTH, "planted", ti, "noise").standard_normal(n_models)
            clipped = int(np.sum((y < 0.0) | (y > 1.0)))
            y = np.clip(y, 0.0, 1.0)
        Y[:, ti] = y
        truth_tasks[task] = {
            "support": [features[j].render() for j in support],
            "weights_raw": [float(v) for v in w],
            "weights_effective": [float(a * v) for v in w],
            "bias": float(b),
            "clipped": clipped,
        }
    st = ScoreTable(models, tasks, Y)
    truth = {
        "kind": "planted",
        "seed": seed,
        "n_models": n_models,
        "n_features": n_features,
        "k_true": k_true,
        "noise_sigma": noise_sigma,
        "tasks": truth_tasks,
    }
    return SynthStudy(pm=pm, st=st, truth=truth)


def gen_null_study(seed=0, n_models=25, n_features=84, n_tasks=1):
    """Probe matrix and scores drawn independently: no real signal."""
    if n_tasks < 1:
        raise ValueOutOfRange(f"n_tasks must be >= 1, got {n_tasks}")
    models, features = _grid(n_models, n_features)
    X = generator(seed, SYNTH, "null", "X").random((n_models, n_features)) * 0.5 + 0.5
    pm = ProbeMatrix(models, features, X)
    tasks = tuple(f"T{i}" for i in range(n_tasks))
    Y = np.empty((n_models, n_tasks), dtype=np.float64)
    for ti in range(n_tasks):
        Y[:, ti] = generator(seed, SYNTH, "null", ti, "y").random(n_models) \
            * (_SCORE_HI - _SCORE_LO) + _SCORE_LO
    st = ScoreTable(models, tasks, Y)
    return SynthStudy(pm=pm, st=st, truth={"kind": "null", "seed": seed})


def _split_sizes(n_per_class):
    if n_per_class < 7:
        raise ValueOutOfRange(f"need at least 7 samples per class, got {n_per_class}")
    n_eval = int(math.floor(0.15 * n_per_class))
    return {"train": n_per_class - 2 * n_eval, "dev": n_eval, "test": n_eval}


def gen_embeddings(kind, dim=8, n_per_class=500, separation=4.0, seed=0,
                   classes=2, metadata=None):
    """Unit-variance Gaussian clouds in one of three shapes.

    blobs: class means 2*separation apart along coordinate axes, so each mean
    sits `separation` standard deviations from the midpoint boundary.
    xor:   two classes on opposite-diagonal quadrant pairs at +-separation in
    the first two dimensions; linearly inseparable by construction.
    null:  identical standard-normal clouds for every class.
    """
    if kind not in ("blobs", "xor", "null"):
        raise ValueOutOfRange(f"unknown embedding kind {kind!r}")
    if classes < 2:
        raise ValueOutOfRange(f"classes must be >= 2, got {classes}")
    if kind == "xor":
        if classes != 2:
            raise ValueOutOfRange("xor supports exactly 2 classes")
        if dim < 2:
            raise ValueOutOfRange("xor needs dim >= 2")
    if separation < 0:
        raise ValueOutOfRange(f"separation must be >= 0, got {separation}")
    sizes = _split_sizes(n_per_class)

    def center_rows(c, count):
        out = np.zeros((count, dim), dtype=np.float64)
        if kind == "blobs":
            axis = c % dim
            out[:, axis] = 2.0 * separation * (1 + c // dim)
        elif kind == "xor":
            half = (count + 1) // 2
            sign0 = 1.0 if c == 0 else -1.0
            out[:half, 0] = separation
            out[:half, 1] = separation * sign0
            out[half:, 0] = -separation
            out[half:, 1] = -separation * sign0
        return out

    splits = {}
    for name, count in sizes.items():
        xs, ys = [], []
        for c in range(classes):
            gen = generator(seed, SYNTH, kind, c, name)
            x = center_rows(c, count) + gen.standard_normal((count, dim))
            xs.append(x)
            ys.append(np.full(count, c, dtype=np.int32))
        splits[name] = (np.vstack(xs).astype(np.float32), np.concatenate(ys))
    meta = {"kind": kind, "dim": dim, "n_per_class": n_per_class,
            "separation": separation, "seed": seed, "classes": classes}
    if metadata:
        meta.update(metadata)
    return EmbeddingDataset(dim=dim, class_count=classes, splits=splits, metadata=meta)


def oracle_ols(X, y, max_iter=500_000, rel_tol=1e-12):
    """Least squares by conjugate gradient on the normal equations.

    Uses nothing beyond matrix products, so it serves as an independent
    cross-check of the closed-form solver.  Zero initialization keeps
    iterates in the row space, so on rank-deficient designs this converges
    to the same minimum-norm solution a pseudoinverse gives.  Returns
    (weights, bias).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    A = np.hstack([X, np.ones((X.shape[0], 1))])
    G = A.T @ A
    b = A.T @ y
    theta = np.zeros(G.shape[0])
    resid = b.copy()
    direction = resid.copy()
    rho = float(resid @ resid)
    scale = max(1.0, float(np.abs(b).max()))
    for _ in range(max_iter):
        if float(np.abs(resid).max()) <= rel_tol * scale:
            return theta[:-1].copy(), float(theta[-1])
        gd = G @ direction
        curv = float(direction @ gd)
        if curv <= 0.0:  # null-space direction; nothing left to reduce
            break
        alpha = rho / curv
        theta += alpha * direction
        resid -= alpha * gd
        rho_next = float(resid @ resid)
        direction = resid + (rho_next / rho) * direction
        rho = rho_next
    if float(np.abs(resid).max()) <= rel_tol * scale:
        return theta[:-1].copy(), float(theta[-1])
    raise NonConvergence(f"conjugate gradient did not reach tolerance in {max_iter} iterations")
