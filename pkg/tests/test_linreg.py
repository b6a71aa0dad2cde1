"""Regression core against exact and independently computed references."""

import math

import numpy as np
import pytest

from probe_oracle import linreg, synth
from probe_oracle.datamodel import StudyConfig
from probe_oracle.errors import (
    DegenerateControl,
    DimensionMismatch,
    InsufficientDof,
    NonFinite,
    TooFewModels,
    ValueOutOfRange,
)

# Exact rational solution of the 5x2 system below, from the normal equations:
# theta = (107/60, 11/12), bias = -41/60, SSE = 4/15.
_X5 = np.array([[1, 2], [2, 1], [3, 4], [4, 3], [5, 6]], dtype=float)
_Y5 = np.array([3, 4, 8, 9, 14], dtype=float)


def test_fit_ols_matches_exact_solution():
    fit = linreg.fit_ols(_X5, _Y5)
    assert fit.weights[0] == pytest.approx(107 / 60, rel=1e-12)
    assert fit.weights[1] == pytest.approx(11 / 12, rel=1e-12)
    assert fit.bias == pytest.approx(-41 / 60, rel=1e-12)
    assert fit.training_rmse == pytest.approx(math.sqrt((4 / 15) / 5), rel=1e-12)


def test_fit_ols_agrees_with_gradient_descent_oracle():
    gen = np.random.default_rng(21)
    X = gen.uniform(0.5, 1.0, size=(40, 8))
    y = gen.uniform(0.5, 1.0, size=40)
    w, b = synth.oracle_ols(X, y)
    fit = linreg.fit_ols(X, y)
    assert np.abs(np.asarray(fit.weights) - w).max() < 1e-8
    assert abs(fit.bias - b) < 1e-8


def test_fit_ols_minimum_norm_on_rank_deficient():
    gen = np.random.default_rng(22)
    X = gen.normal(size=(6, 10))  # underdetermined
    y = gen.normal(size=6)
    fit = linreg.fit_ols(X, y)
    assert fit.training_rmse < 1e-10  # interpolates
    w, b = synth.oracle_ols(X, y, max_iter=2_000_000)
    assert np.abs(np.asarray(fit.weights) - w).max() < 1e-6
    assert abs(fit.bias - b) < 1e-6


def test_fit_ols_rejects_bad_input():
    with pytest.raises(NonFinite):
        linreg.fit_ols(np.array([[np.inf, 1.0]]), np.array([1.0]))
    with pytest.raises(DimensionMismatch):
        linreg.fit_ols(np.ones((3, 2)), np.ones(4))


def test_predict_and_rmse_consistent():
    fit = linreg.fit_ols(_X5, _Y5)
    pred = linreg.predict(fit, _X5)
    manual = _X5 @ np.asarray(fit.weights) + fit.bias
    assert np.allclose(pred, manual)
    assert linreg.rmse(fit, _X5, _Y5) == pytest.approx(fit.training_rmse, rel=1e-12)


def test_fold_assignments_contiguous_chunks_of_permutation():
    cfg = StudyConfig(seed=13, folds=5)
    ids = linreg.fold_assignments(23, cfg)
    assert ids.shape == (23,)
    counts = np.bincount(ids, minlength=5)
    # 23 = 5+5+5+4+4: remainder goes to the first folds
    assert counts.tolist() == [5, 5, 5, 4, 4]
    # deterministic
    assert np.array_equal(ids, linreg.fold_assignments(23, cfg))
    # different seed, different split
    assert not np.array_equal(ids, linreg.fold_assignments(23, StudyConfig(seed=14)))
    with pytest.raises(TooFewModels):
        linreg.fold_assignments(4, cfg)


def test_cv_rmse_pools_sse_across_folds():
    cfg = StudyConfig(seed=5, folds=5)
    gen = np.random.default_rng(30)
    X = gen.uniform(0.5, 1.0, size=(25, 3))
    y = gen.uniform(0.5, 1.0, size=25)
    out = linreg.cv_rmse(X, y, cfg)
    # recompute by hand from the published fold ids
    fold_ids = np.asarray(out.fold_ids)
    sse = 0.0
    for f in range(cfg.folds):
        tr = fold_ids != f
        te = ~tr
        fit = linreg.fit_ols(X[tr], y[tr])
        resid = linreg.predict(fit, X[te]) - y[te]
        sse += float(resid @ resid)
    assert out.rmse == pytest.approx(math.sqrt(sse / 25), rel=1e-12)


def test_control_features_have_declared_scale():
    cfg = StudyConfig(seed=2, control_draws=4)
    Z = linreg.control_features(4000, 6, cfg, draw_index=1, task="t")
    assert Z.shape == (4000, 6)
    assert Z.std() == pytest.approx(math.sqrt(0.1), rel=0.05)
    # draws differ by index and are reproducible
    Z2 = linreg.control_features(4000, 6, cfg, draw_index=2, task="t")
    assert not np.array_equal(Z, Z2)
    assert np.array_equal(Z, linreg.control_features(4000, 6, cfg, draw_index=1, task="t"))
    with pytest.raises(ValueOutOfRange):
        linreg.control_features(10, 0, cfg, draw_index=1)
    with pytest.raises(ValueOutOfRange):
        linreg.control_features(10, 3, cfg, draw_index=0)


def test_control_rmse_invariant_to_scale_reading():
    # variance 0.1 and sigma 0.1 readings share the same standard-normal draw,
    # and OLS is scale free, so the control RMSE is bit-identical
    gen = np.random.default_rng(40)
    y = gen.uniform(0.5, 1.0, size=25)
    a = linreg.control_rmse(y, 5, StudyConfig(seed=9, control_scale="variance"), 1, "t")
    b = linreg.control_rmse(y, 5, StudyConfig(seed=9, control_scale="sigma"), 1, "t")
    assert a == b


def test_control_stats_mean_over_draws():
    cfg = StudyConfig(seed=9, control_draws=6)
    gen = np.random.default_rng(41)
    y = gen.uniform(0.5, 1.0, size=25)
    mean, std, draws = linreg.control_stats(y, 5, cfg, task="t")
    assert len(draws) == 6
    assert mean == pytest.approx(float(np.mean(draws)), rel=1e-12)
    assert std == pytest.approx(float(np.std(draws, ddof=1)), rel=1e-12)
    singles = [linreg.control_rmse(y, 5, cfg, i, "t") for i in range(1, 7)]
    assert np.allclose(sorted(singles), sorted(draws))


def test_rmse_reduction_formula():
    assert linreg.rmse_reduction(0.05, 0.10) == pytest.approx(50.0)
    assert linreg.rmse_reduction(0.10, 0.10) == pytest.approx(0.0)
    assert linreg.rmse_reduction(0.15, 0.10) == pytest.approx(-50.0)
    with pytest.raises(DegenerateControl):
        linreg.rmse_reduction(0.1, 0.0)


def test_mc_uncertainty_shape_and_guards():
    cfg = StudyConfig(seed=3, control_draws=12)
    gen = np.random.default_rng(50)
    y = gen.uniform(0.5, 1.0, size=25)
    out = linreg.mc_uncertainty(y, 4, cfg, "t")
    assert set(out) >= {"mean", "std", "ratio_pct"}
    assert out["ratio_pct"] == pytest.approx(100.0 * out["std"] / out["mean"], rel=1e-12)
    with pytest.raises(InsufficientDof):
        linreg.mc_uncertainty(y, 4, StudyConfig(seed=3, control_draws=1), "t")


def test_regression_report_fields(planted, small_cfg):
    X, y = planted.pm.values, planted.st.column("T0")
    rep = linreg.regression_report("T0", planted.pm.features, X, y, small_cfg)
    assert rep.task == "T0"
    assert rep.control_draws_used == small_cfg.control_draws
    assert rep.rmse_reduction == pytest.approx(
        100.0 * (rep.rmse_control - rep.rmse_cv) / rep.rmse_control, rel=1e-12
    )
    single = linreg.regression_report("T0", planted.pm.features, X, y, small_cfg, single_draw=True)
    assert single.control_draws_used == 1
    obj = rep.to_json_obj()
    assert obj["task"] == "T0" and "rmse_reduction" in obj
