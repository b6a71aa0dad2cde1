"""Sequential (order-dependent) ANOVA over nested least-squares fits.

Features are added one at a time on top of the bias; each step's sum of
squares is the drop in residual SS, tested against the full model's residual
mean square with an F(1, residual dof) reference.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InsufficientDof, ValueOutOfRange
from .linreg import _as_design, _lstsq_aug
from .special import f_cdf

_CLAMP_REL = 1e-9


@dataclass(frozen=True)
class AnovaRow:
    feature: object  # FeatureId when the caller has one, else column index
    sequential_ss: float
    f_stat: float
    p_value: float


@dataclass(frozen=True)
class AnovaTable:
    rows: tuple
    residual_ss: float
    residual_dof: int
    total_ss: float

    def to_json_obj(self):
        return {
            "rows": [
                {
                    "feature": r.feature.render() if hasattr(r.feature, "render") else r.feature,
                    "sequential_ss": r.sequential_ss,
                    "f": r.f_stat,
                    "p": r.p_value,
                }
                for r in self.rows
            ],
            "residual_ss": self.residual_ss,
            "residual_dof": self.residual_dof,
            "total_ss": self.total_ss,
        }


def anova_sequential(X, y, feature_ids=None):
    """Sequential ANOVA table for the features of X, in column order."""
    X, y = _as_design(X, y)
    K, N = X.shape
    if N < 1:
        raise DimensionMismatch("need at least one feature column")
    if feature_ids is not None and len(feature_ids) != N:
        raise DimensionMismatch(f"{len(feature_ids)} feature ids for {N} columns")
    if K <= N + 1:
        raise InsufficientDof(f"sequential ANOVA needs K > N + 1 rows, got K={K}, N={N}")

    rss = np.empty(N + 1)
    rss[0] = float(np.sum((y - y.mean()) ** 2))
    for i in range(1, N + 1):
        theta = _lstsq_aug(X[:, :i], y)
        resid = X[:, :i] @ theta[:-1] + theta[-1] - y
        rss[i] = float(resid @ resid)

    residual_ss = float(rss[N])
    residual_dof = K - (N + 1)
    ms_resid = residual_ss / residual_dof
    scale = max(rss[0], 1.0)

    rows = []
    for i in range(1, N + 1):
        seq = rss[i - 1] - rss[i]
        if seq < 0.0:
            # nested fits cannot raise RSS; tiny negatives are roundoff
            if seq < -_CLAMP_REL * scale:
                raise ValueOutOfRange(f"sequential SS {seq} is negative beyond roundoff")
            seq = 0.0
        if ms_resid > 0.0:
            f = seq / ms_resid
            p = 1.0 - f_cdf(f, 1, residual_dof)
        else:
            # saturated fit: any real increment is infinitely significant
            f = np.inf if seq > _CLAMP_REL * scale else 0.0
            p = 0.0 if np.isinf(f) else 1.0
        fid = feature_ids[i - 1] if feature_ids is not None else i - 1
        rows.append(AnovaRow(feature=fid, sequential_ss=float(seq), f_stat=float(f), p_value=float(p)))

    return AnovaTable(
        rows=tuple(rows),
        residual_ss=residual_ss,
        residual_dof=residual_dof,
        total_ss=float(rss[0]),
    )


def significant_layers(tables, alpha=0.05):
    """Layer lists with p < alpha, per probing task and fine-tune task.

    tables: {fine_tune_task: {probing_task: AnovaTable}} where each table was
    fit on that probing task's layers (in ascending layer order).  Returns
    {probing_task: {fine_tune_task: (layers,)}}.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueOutOfRange(f"alpha must lie in (0, 1), got {alpha}")
    out = {}
    for ft_task, by_probe in tables.items():
        for probing_task, table in by_probe.items():
            layers = []
            for row in table.rows:
                feat = row.feature
                if not hasattr(feat, "layer") or feat.task != probing_task:
                    raise DimensionMismatch(
                        f"table for {probing_task!r} carries foreign feature {feat!r}"
                    )
                if row.p_value < alpha:
                    layers.append(feat.layer)
            out.setdefault(probing_task, {})[ft_task] = tuple(sorted(layers))
    return out


def render_layers(layers, compress=False):
    """Human-readable layer list; optional 4-6 style range compression."""
    if not layers:
        return "None"
    layers = sorted(layers)
    if not compress:
        return ",".join(str(v) for v in layers)
    parts = []
    start = prev = layers[0]
    for v in layers[1:] + [None]:
        if v is not None and v == prev + 1:
            prev = v
            continue
        parts.append(str(start) if start == prev else f"{start}-{prev}")
        if v is not None:
            start = prev = v
    return ",".join(parts)
