"""Feature selection strategies, including exhaustive subset search."""

import itertools

import numpy as np
import pytest

from probe_oracle import anova, backend, linreg, selection, synth
from probe_oracle.datamodel import FeatureId, ProbeMethod, StudyConfig
from probe_oracle.errors import CapExceeded, KTooLarge, UnknownTask, ValueOutOfRange


def test_best_k_recovers_planted_support(planted, small_cfg):
    for task in ("T0", "T1"):
        res = selection.best_k_search(planted.pm, planted.st, task, 3, small_cfg)
        got = sorted(f.render() for f in res.chosen)
        want = sorted(planted.truth["tasks"][task]["support"])
        assert got == want
        assert res.report.rmse_cv < 1e-10
        assert res.report.rmse_reduction > 99.9


def test_best_k_matches_brute_force_cv(small_cfg, tiny_study):
    pm, st = tiny_study(n_models=12, n_features=5, seed=4)
    res = selection.best_k_search(pm, st, "task.a", 2, small_cfg)
    y = st.column("task.a")
    best = None
    for combo in itertools.combinations(range(5), 2):
        X = pm.values[:, combo]
        r = linreg.cv_rmse(X, y, small_cfg).rmse
        if best is None or r < best[0] - 1e-15:
            best = (r, combo)
    want = tuple(pm.features[i] for i in best[1])
    assert res.chosen == want
    assert res.report.rmse_cv == pytest.approx(best[0], rel=1e-12)


def test_best_k_train_objective_matches_brute_force(small_cfg, tiny_study):
    pm, st = tiny_study(n_models=12, n_features=5, seed=6)
    res = selection.best_k_search(pm, st, "task.a", 2, small_cfg, objective="train")
    y = st.column("task.a")
    best = None
    for combo in itertools.combinations(range(5), 2):
        fit = linreg.fit_ols(pm.values[:, combo], y)
        sse = fit.training_rmse ** 2 * len(y)
        if best is None or sse < best[0] - 1e-18:
            best = (sse, combo)
    assert res.chosen == tuple(pm.features[i] for i in best[1])
    assert "ranked by training SSE" in res.notes


def test_best_k_guards(small_cfg, tiny_study):
    pm, st = tiny_study(n_models=12, n_features=5, seed=4)
    with pytest.raises(ValueOutOfRange):
        selection.best_k_search(pm, st, "task.a", 0, small_cfg)
    with pytest.raises(KTooLarge):
        selection.best_k_search(pm, st, "task.a", 6, small_cfg)
    tight = StudyConfig(seed=7, control_draws=8, subset_cap=5)
    with pytest.raises(CapExceeded):
        selection.best_k_search(pm, st, "task.a", 2, tight)
    with pytest.raises(UnknownTask):
        selection.best_k_search(pm, st, "nope", 2, small_cfg)


def test_subset_count():
    assert selection.subset_count(5, 2) == 10
    assert selection.subset_count(84, 3) == 95284


def test_best_k_backends_bit_identical(both_backends, small_cfg, tiny_study):
    pm, st = tiny_study(n_models=14, n_features=7, seed=9)
    out = {}
    for flavor in ("numba", "numpy"):
        backend.set_backend(flavor)
        out[flavor] = selection.best_k_search(pm, st, "task.a", 3, small_cfg)
    a, b = out["numba"], out["numpy"]
    assert a.chosen == b.chosen
    assert a.report.rmse_cv == b.report.rmse_cv
    assert a.report.rmse_reduction == b.report.rmse_reduction


def test_best_k_handles_duplicate_columns(both_backends, small_cfg):
    # identical columns make fold Gram matrices singular; the search must fall
    # back to the minimum-norm solve and still agree with the public CV path
    gen = np.random.default_rng(31)
    from probe_oracle.datamodel import ModelId, ProbeMatrix, ScoreTable

    models = tuple(ModelId(f"m{i:02d}") for i in range(12))
    feats = tuple(FeatureId("pos", l + 1) for l in range(4))
    base = gen.uniform(0.4, 0.9, size=(12, 4))
    base[:, 3] = base[:, 0]  # exact duplicate
    pm = ProbeMatrix(models, feats, base)
    st = ScoreTable(models, ("t",), gen.uniform(0.5, 0.9, size=(12, 1)))
    for flavor in ("numba", "numpy"):
        backend.set_backend(flavor)
        res = selection.best_k_search(pm, st, "t", 2, small_cfg)
        direct = linreg.cv_rmse(pm.restrict(res.chosen), st.column("t"), small_cfg).rmse
        assert res.report.rmse_cv == pytest.approx(direct, rel=1e-9)


def test_all_layers_one_task(planted, small_cfg):
    res = selection.all_layers_one_task(planted.pm, planted.st, "T0", "P0", small_cfg)
    assert res.strategy == "all_layers:P0"
    feats = tuple(f for f in planted.pm.features if f.task == "P0")
    assert res.chosen == feats
    direct = linreg.cv_rmse(planted.pm.restrict(feats), planted.st.column("T0"), small_cfg)
    assert res.report.rmse_cv == pytest.approx(direct.rmse, rel=1e-12)


def test_choose_layers_majority_and_fallback():
    # near-orthogonal columns plus moderate noise: only layer 2 stays
    # significant, so the vote is unanimous rather than tie-broken
    feats = tuple(FeatureId("pos", l + 1) for l in range(3))
    gen = np.random.default_rng(44)
    n = 200
    X = gen.normal(size=(n, 3))
    strong = {}
    for name in ("ft.a", "ft.b", "ft.c"):
        y = X[:, 1] + 0.3 * gen.normal(size=n)
        strong[name] = {"pos": anova.anova_sequential(X, y, feats)}
    for tbl in (t["pos"] for t in strong.values()):
        assert tbl.rows[1].p_value < 1e-6
    chosen = selection.choose_layers(strong)
    layer, fell_back = chosen["pos"]
    assert layer == 2 and not fell_back
    weak = {"ft.a": {"pos": anova.anova_sequential(X, gen.normal(size=n), feats)}}
    chosen2 = selection.choose_layers(weak)
    layer2, fell_back2 = chosen2["pos"]
    assert layer2 in (1, 2, 3)
    most_significant = min(weak["ft.a"]["pos"].rows, key=lambda r: r.p_value)
    if fell_back2:
        # fallback picks the layer with the smallest p-value overall
        assert feats[layer2 - 1].layer == feats[weak["ft.a"]["pos"].rows.index(most_significant)].layer


def test_one_layer_per_task_reports(planted, small_cfg):
    grid = {}
    for t in planted.st.tasks:
        _, y = None, planted.st.column(t)
        per = {}
        for p in ("P0", "P1"):
            feats = tuple(f for f in planted.pm.features if f.task == p)
            per[p] = anova.anova_sequential(planted.pm.restrict(feats), y, feats)
        grid[t] = per
    out = selection.one_layer_per_task(grid, planted.pm, planted.st, small_cfg)
    assert set(out) == set(planted.st.tasks)
    for t, res in out.items():
        assert len(res.chosen) == 2  # one layer per probing task
        tasks = [f.task for f in res.chosen]
        assert tasks == ["P0", "P1"]
        assert any("optimistically biased" in n for n in res.notes)
        direct = linreg.cv_rmse(planted.pm.restrict(res.chosen), planted.st.column(t), small_cfg)
        assert res.report.rmse_cv == pytest.approx(direct.rmse, rel=1e-12)
