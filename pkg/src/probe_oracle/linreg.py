"""Least-squares prediction of fine-tune scores and the random-control yardstick.

All fits are ordinary least squares on the bias-augmented design [X | 1];
rank-deficient designs get the minimum-norm solution.  Cross-validation pools
held-out squared errors over seeded contiguous folds.  The control baseline
refits the same pipeline on freshly drawn Gaussian feature matrices; because
OLS predictions are invariant to any column scaling, the control is computed
directly on standard-normal draws and is therefore identical under either
reading of the configured control scale (variance or standard deviation).
"""

from dataclasses import dataclass

import numpy as np

from . import seeding
from .errors import (
    DegenerateControl,
    DimensionMismatch,
    InsufficientDof,
    NonFinite,
    TooFewModels,
    ValueOutOfRange,
)

# below this, a control RMSE is numerical noise and ratios against it are junk
_DEGENERATE_RMSE = 1e-14


@dataclass(frozen=True)
class FitResult:
    theta: tuple  # N feature weights, bias last
    training_rmse: float
    feature_ids: tuple = None

    @property
    def weights(self):
        return np.array(self.theta[:-1])

    @property
    def bias(self):
        return self.theta[-1]


@dataclass(frozen=True)
class CvResult:
    rmse: float
    fold_ids: tuple


@dataclass(frozen=True)
class RegressionReport:
    task: str
    feature_ids: tuple
    rmse_cv: float
    rmse_control: float
    rmse_reduction: float
    fold_ids: tuple
    control_mean: float
    control_std: float
    control_draws_used: int

    def to_json_obj(self):
        return {
            "task": self.task,
            "features": [f.render() for f in self.feature_ids],
            "rmse_cv": self.rmse_cv,
            "rmse_control": self.rmse_control,
            "rmse_reduction": self.rmse_reduction,
            "fold_ids": list(self.fold_ids),
            "control": {
                "mean": self.control_mean,
                "std": self.control_std,
                "draws": self.control_draws_used,
            },
        }


def _as_design(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionMismatch(f"X must be 2-D, got shape {X.shape}")
    if y.ndim != 1 or y.shape[0] != X.shape[0]:
        raise DimensionMismatch(f"y shape {y.shape} does not match X shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise NonFinite("X contains non-finite values")
    if not np.all(np.isfinite(y)):
        raise NonFinite("y contains non-finite values")
    return X, y


def _lstsq_aug(X, y):
    aug = np.hstack([X, np.ones((X.shape[0], 1))])
    theta, _, _, _ = np.linalg.lstsq(aug, y, rcond=None)
    return theta


def fit_ols(X, y, feature_ids=None):
    """Least-squares fit with bias; minimum-norm when the design is deficient."""
    X, y = _as_design(X, y)
    if X.shape[0] < 1:
        raise TooFewModels("need at least one row to fit")
    theta = _lstsq_aug(X, y)
    resid = X @ theta[:-1] + theta[-1] - y
    training_rmse = float(np.sqrt(np.mean(resid**2)))
    ids = tuple(feature_ids) if feature_ids is not None else None
    return FitResult(theta=tuple(float(t) for t in theta), training_rmse=training_rmse, feature_ids=ids)


def predict(fit, X):
    X = np.asarray(X, dtype=np.float64)
    theta = np.array(fit.theta)
    if X.ndim != 2 or X.shape[1] != theta.shape[0] - 1:
        raise DimensionMismatch(f"X shape {X.shape} does not match fit with {len(fit.theta) - 1} features")
    return X @ theta[:-1] + theta[-1]


def rmse(fit, X, y):
    """Root mean squared prediction error of a fit on the given data."""
    X, y = _as_design(X, y)
    resid = predict(fit, X) - y
    return float(np.sqrt(np.mean(resid**2)))


def fold_assignments(n_rows, cfg):
    """Fold index per row: seeded shuffle, then contiguous chunks.

    Chunk sizes are as equal as possible, remainders going to the first
    folds.  Depends only on (seed, n_rows, folds), so every regression in a
    study sees the same split.
    """
    if cfg.folds > n_rows:
        raise TooFewModels(f"{cfg.folds} folds need at least {cfg.folds} rows, got {n_rows}")
    perm = seeding.generator(cfg.seed, seeding.FOLDS, n_rows, cfg.folds).permutation(n_rows)
    base, extra = divmod(n_rows, cfg.folds)
    fold_ids = np.empty(n_rows, dtype=np.int64)
    pos = 0
    for f in range(cfg.folds):
        size = base + (1 if f < extra else 0)
        fold_ids[perm[pos : pos + size]] = f
        pos += size
    return fold_ids


def cv_rmse(X, y, cfg):
    """K-fold cross-validated RMSE, pooling held-out squared errors."""
    X, y = _as_design(X, y)
    K = X.shape[0]
    fold_ids = fold_assignments(K, cfg)
    sse = 0.0
    for f in range(cfg.folds):
        te = fold_ids == f
        tr = ~te
        theta = _lstsq_aug(X[tr], y[tr])
        resid = X[te] @ theta[:-1] + theta[-1] - y[te]
        sse += float(resid @ resid)
    return CvResult(rmse=float(np.sqrt(sse / K)), fold_ids=tuple(int(f) for f in fold_ids))


def control_features(n_rows, n_features, cfg, draw_index, task=""):
    """One materialized control matrix (scaled Gaussian draw), for inspection."""
    z = _control_draw(n_rows, n_features, cfg, draw_index, task)
    return cfg.control_sigma * z


def _control_draw(n_rows, n_features, cfg, draw_index, task):
    if n_features < 1:
        raise ValueOutOfRange(f"n_features must be >= 1, got {n_features}")
    if draw_index < 1:
        raise ValueOutOfRange(f"draw_index is 1-based, got {draw_index}")
    gen = seeding.generator(cfg.seed, seeding.CONTROL, task, n_features, draw_index)
    return gen.standard_normal((n_rows, n_features))


def control_rmse(y, n_features, cfg, draw_index, task=""):
    """Cross-validated RMSE of one random-feature control regression.

    Fits on the raw standard-normal draw; column scale cannot change OLS
    predictions, so the result holds for any positive control scale.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1:
        raise DimensionMismatch(f"y must be 1-D, got shape {y.shape}")
    z = _control_draw(y.shape[0], n_features, cfg, draw_index, task)
    return cv_rmse(z, y, cfg).rmse


def rmse_reduction(rmse_model, rmse_control):
    """Percent improvement of a model RMSE over its control RMSE."""
    if not (np.isfinite(rmse_model) and np.isfinite(rmse_control)):
        raise NonFinite("RMSE inputs must be finite")
    if rmse_model < 0 or rmse_control < 0:
        raise ValueOutOfRange("RMSE inputs must be non-negative")
    if rmse_control <= _DEGENERATE_RMSE:
        raise DegenerateControl(f"control RMSE {rmse_control} is numerically zero")
    return (rmse_control - rmse_model) / rmse_control * 100.0


def control_stats(y, n_features, cfg, task=""):
    """Mean/std of the control RMSE over the configured number of draws."""
    draws = np.array(
        [control_rmse(y, n_features, cfg, d, task) for d in range(1, cfg.control_draws + 1)]
    )
    mean = float(draws.mean())
    std = float(draws.std(ddof=1)) if draws.size > 1 else 0.0
    return mean, std, draws


def mc_uncertainty(y, n_features, cfg, task=""):
    """Spread of the control baseline across draws, as a percentage of its mean."""
    if cfg.control_draws < 2:
        raise InsufficientDof("need at least 2 control draws to estimate spread")
    mean, std, draws = control_stats(y, n_features, cfg, task)
    if mean <= _DEGENERATE_RMSE:
        raise DegenerateControl(f"mean control RMSE {mean} is numerically zero")
    return {
        "mean": mean,
        "std": std,
        "ratio_pct": std / mean * 100.0,
        "draws": tuple(float(d) for d in draws),
    }


def regression_report(task, feature_ids, X, y, cfg, single_draw=False):
    """Full probe-vs-control comparison for one feature set on one task."""
    cv = cv_rmse(X, y, cfg)
    if single_draw:
        value = control_rmse(y, X.shape[1], cfg, 1, task)
        mean, std, used = value, 0.0, 1
    else:
        mean, std, draws = control_stats(y, X.shape[1], cfg, task)
        used = draws.size
    return RegressionReport(
        task=task,
        feature_ids=tuple(feature_ids),
        rmse_cv=cv.rmse,
        rmse_control=mean,
        rmse_reduction=rmse_reduction(cv.rmse, mean),
        fold_ids=cv.fold_ids,
        control_mean=mean,
        control_std=std,
        control_draws_used=used,
    )
