"""Family separability statistics."""

import numpy as np
import pytest

from probe_oracle import backend, fingerprint
from probe_oracle.datamodel import FeatureId, ModelId, ProbeMatrix, StudyConfig
from probe_oracle.errors import (
    CapExceeded,
    DegenerateData,
    InsufficientDof,
    KTooLarge,
)


def _shifted_matrix(n_per_family=6, n_feats=5, shift=0.1, seed=0):
    gen = np.random.default_rng(seed)
    models = tuple(
        ModelId(f"m{i}", family=("alpha" if i < n_per_family else "beta"))
        for i in range(2 * n_per_family)
    )
    feats = tuple(FeatureId("pos", l) for l in range(1, n_feats + 1))
    base = gen.uniform(0.55, 0.85, size=(2 * n_per_family, n_feats))
    base[:n_per_family] += shift
    return ProbeMatrix(models, feats, np.clip(base, 0.0, 1.0))


def test_family_labels_sorted_and_counted():
    pm = _shifted_matrix()
    names, y, counts = fingerprint.family_labels(pm.models)
    assert names == ("alpha", "beta")
    assert counts.tolist() == [6, 6]
    assert y.sum() == 6  # six models labeled 1


def test_separable_families_reject_null(family_matrix):
    rep = fingerprint.fingerprint(_shifted_matrix(shift=0.12, seed=3), 2,
                                  StudyConfig(seed=5, folds=4))
    assert rep.stratified
    assert rep.mean_diff > 0.1
    assert rep.p_value < 0.01
    assert rep.max_probe_accuracy > rep.trivial_baseline
    assert rep.trivial_baseline == pytest.approx(0.5)
    assert rep.n_subsets == 10 and rep.dof == 9


def test_shuffled_families_show_no_signal():
    # destroy the family structure by shuffling labels: mean diff ~ 0
    gen = np.random.default_rng(8)
    pm = _shifted_matrix(shift=0.12, seed=3)
    fams = ["alpha"] * 6 + ["beta"] * 6
    gen.shuffle(fams)
    models = tuple(ModelId(f"m{i}", family=f) for i, f in enumerate(fams))
    pm2 = ProbeMatrix(models, pm.features, pm.values)
    rep = fingerprint.fingerprint(pm2, 2, StudyConfig(seed=5, folds=4))
    assert rep.p_value > 1e-4  # no decisive signal from shuffled labels


def test_fingerprint_deterministic_and_backend_invariant(both_backends, family_matrix):
    out = {}
    for flavor in ("numba", "numpy"):
        backend.set_backend(flavor)
        out[flavor] = fingerprint.fingerprint(family_matrix, 2, StudyConfig(seed=3, folds=4))
    a, b = out["numba"], out["numpy"]
    assert a.mean_diff == b.mean_diff
    assert a.t_stat == b.t_stat and a.p_value == b.p_value
    backend.set_backend("numpy")
    again = fingerprint.fingerprint(family_matrix, 2, StudyConfig(seed=3, folds=4))
    assert again.mean_diff == b.mean_diff


def test_fingerprint_guards(family_matrix):
    with pytest.raises(KTooLarge):
        fingerprint.fingerprint(family_matrix, 99, StudyConfig(seed=3, folds=4))
    with pytest.raises(CapExceeded):
        fingerprint.fingerprint(family_matrix, 2, StudyConfig(seed=3, folds=4, subset_cap=3))
    with pytest.raises(InsufficientDof):
        # only one subset available: C(5,5) = 1
        fingerprint.fingerprint(family_matrix, 5, StudyConfig(seed=3, folds=4))
    gen = np.random.default_rng(1)
    same = tuple(ModelId(f"m{i}", family="solo") for i in range(8))
    pm = ProbeMatrix(same, family_matrix.features, gen.uniform(0.3, 0.9, size=(8, 5)))
    with pytest.raises(DegenerateData):
        fingerprint.fingerprint(pm, 2, StudyConfig(seed=3, folds=4))


def test_stratified_folds_balance_families(family_matrix):
    names, y, counts = fingerprint.family_labels(family_matrix.models)
    cfg = StudyConfig(seed=5, folds=4)
    folds = fingerprint._stratified_folds(y, len(names), cfg)
    for f in range(4):
        members = y[folds == f]
        per_class = np.bincount(members, minlength=2)
        assert per_class.max() - per_class.min() <= 1


def test_unstratified_when_family_smaller_than_folds():
    gen = np.random.default_rng(2)
    models = tuple(
        ModelId(f"m{i}", family=("tiny" if i < 2 else "big")) for i in range(10)
    )
    feats = tuple(FeatureId("pos", l) for l in range(1, 5))
    pm = ProbeMatrix(models, feats, gen.uniform(0.4, 0.9, size=(10, 4)))
    rep = fingerprint.fingerprint(pm, 2, StudyConfig(seed=3, folds=5))
    assert not rep.stratified


def test_per_subset_details(family_matrix):
    rep = fingerprint.fingerprint(family_matrix, 2, StudyConfig(seed=3, folds=4),
                                  return_details=True)
    assert len(rep.per_subset) == rep.n_subsets
    label, pa, ca = rep.per_subset[0]
    assert label == "pos_1;pos_2"
    recomputed = np.mean([p - c for _, p, c in rep.per_subset])
    assert rep.mean_diff == pytest.approx(float(recomputed), rel=1e-12)
    obj = rep.to_json_obj(include_details=True)
    assert len(obj["per_subset"]) == rep.n_subsets
