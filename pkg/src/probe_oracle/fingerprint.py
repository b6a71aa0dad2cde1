"""Model-family separability of probe features.

For every k-subset of probe columns, a cross-validated logistic regression
tries to recover each model's family from just those k accuracies.  The same
classifier is run on a matched standard-normal control drawn per subset, and a
one-sided paired t-test asks whether probe features beat noise on average.
Control columns are standardized inside the CV exactly like probe columns, so
the control's scale drops out and a unit draw suffices.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import backend, probekit
from .datamodel import ProbeMethod, StudyConfig
from .errors import (
    CapExceeded,
    DegenerateData,
    InsufficientDof,
    KTooLarge,
    ValueOutOfRange,
)
from .seeding import FINGERPRINT, generator
from .special import t_cdf

_CHUNK = 4096


@dataclass(frozen=True)
class FingerprintReport:
    k: int
    n_subsets: int
    families: tuple
    family_counts: tuple
    mean_diff: float
    sd_diff: float
    t_stat: float
    dof: int
    p_value: float
    max_probe_accuracy: float
    trivial_baseline: float
    stratified: bool
    per_subset: tuple = ()

    def to_json_obj(self, include_details=False):
        obj = {
            "k": self.k,
            "n_subsets": self.n_subsets,
            "families": list(self.families),
            "family_counts": list(self.family_counts),
            "mean_diff": self.mean_diff,
            "sd_diff": self.sd_diff,
            "t_stat": self.t_stat,
            "dof": self.dof,
            "p_value": self.p_value,
            "max_probe_accuracy": self.max_probe_accuracy,
            "trivial_baseline": self.trivial_baseline,
            "stratified": self.stratified,
        }
        if include_details:
            obj["per_subset"] = [
                {"subset": label, "probe_accuracy": pa, "control_accuracy": ca}
                for label, pa, ca in self.per_subset
            ]
        return obj


def family_labels(models):
    """Map each model to an integer id over the sorted family names."""
    fams = [m.family_name for m in models]
    names = sorted(set(fams))
    index = {name: i for i, name in enumerate(names)}
    y = np.array([index[f] for f in fams], dtype=np.int64)
    counts = np.bincount(y, minlength=len(names))
    return tuple(names), y, counts


def _stratified_folds(y, n_classes, cfg):
    """Deal each class round-robin over folds, rotating the start so fold
    sizes stay balanced overall."""
    fold_of = np.empty(y.size, dtype=np.int64)
    gen = generator(cfg.seed, FINGERPRINT, "folds")
    start = 0
    for c in range(n_classes):
        members = np.flatnonzero(y == c)
        perm = gen.permutation(members.size)
        for j, m in enumerate(members[perm]):
            fold_of[m] = (start + j) % cfg.folds
        start = (start + members.size) % cfg.folds
    return fold_of


def fingerprint(pm, k, cfg=StudyConfig(), method=ProbeMethod.BEST_BY_DEV,
                return_details=False):
    feats = pm.with_method(method)
    n = len(feats)
    if k < 1:
        raise ValueOutOfRange(f"k must be positive, got {k}")
    if k > n:
        raise KTooLarge(f"k={k} exceeds the {n} available {method.value} features")
    n_subsets = math.comb(n, k)
    if n_subsets > cfg.subset_cap:
        raise CapExceeded(f"C({n},{k}) = {n_subsets} exceeds the cap of {cfg.subset_cap}")
    if n_subsets < 2:
        raise InsufficientDof("need at least 2 subsets for a paired t-test")

    families, y, counts = family_labels(pm.models)
    if len(families) < 2:
        raise DegenerateData("all models share one family; nothing to separate")
    n_classes = len(families)

    stratified = bool(counts.min() >= cfg.folds)
    if stratified:
        fold_ids = _stratified_folds(y, n_classes, cfg)
    else:
        from .linreg import fold_assignments

        fold_ids = fold_assignments(len(pm.models), cfg)

    X = pm.restrict(feats)
    subsets = np.array(list(itertools.combinations(range(n), k)), dtype=np.int64)
    kern = backend.probes_kernels()
    l2, epochs, tol = probekit._L2, probekit._LOGREG_EPOCHS, probekit._LOGREG_TOL

    probe_acc = np.empty(n_subsets, dtype=np.float64)
    control_acc = np.empty(n_subsets, dtype=np.float64)
    n_models = X.shape[0]
    for lo in range(0, n_subsets, _CHUNK):
        hi = min(lo + _CHUNK, n_subsets)
        probe_acc[lo:hi] = kern.cv_logreg_acc_cols(
            X, y, n_classes, fold_ids, cfg.folds, subsets[lo:hi], l2, epochs, tol
        )
        Z = np.empty((hi - lo, n_models, k), dtype=np.float64)
        for s in range(lo, hi):
            Z[s - lo] = generator(cfg.seed, FINGERPRINT, "control", s).standard_normal(
                (n_models, k)
            )
        control_acc[lo:hi] = kern.cv_logreg_acc_mats(
            Z, y, n_classes, fold_ids, cfg.folds, l2, epochs, tol
        )

    diffs = probe_acc - control_acc
    mean = float(diffs.mean())
    sd = float(diffs.std(ddof=1))
    dof = n_subsets - 1
    if sd == 0.0:
        t = math.inf if mean > 0 else (-math.inf if mean < 0 else 0.0)
    else:
        t = mean / (sd / math.sqrt(n_subsets))
    if math.isinf(t):
        p = 0.0 if t > 0 else 1.0
    else:
        p = 1.0 - t_cdf(t, dof)

    details = ()
    if return_details:
        labels = [";".join(feats[i].render() for i in row) for row in subsets]
        details = tuple(
            (labels[s], float(probe_acc[s]), float(control_acc[s]))
            for s in range(n_subsets)
        )
    return FingerprintReport(
        k=k,
        n_subsets=n_subsets,
        families=families,
        family_counts=tuple(int(c) for c in counts),
        mean_diff=mean,
        sd_diff=sd,
        t_stat=float(t),
        dof=dof,
        p_value=float(p),
        max_probe_accuracy=float(probe_acc.max()),
        trivial_baseline=float(counts.max() / len(pm.models)),
        stratified=stratified,
        per_subset=details,
    )
