"""Feature-selection strategies over a probe matrix.

Three ways to pick predictor columns for one fine-tune task: every layer of a
single probing task; one layer per probing task voted in by ANOVA
significance; or the exhaustive best-k subset search.  Each returns the
chosen features plus a full probe-vs-control regression report.
"""

import itertools
import math

from dataclasses import dataclass

import numpy as np

from . import backend
from .datamodel import FeatureId, ProbeMethod, join
from .errors import CapExceeded, KTooLarge, UnknownTask, ValueOutOfRange
from .linreg import fold_assignments, regression_report


@dataclass(frozen=True)
class SelectionResult:
    task: str
    strategy: str
    chosen: tuple
    report: object
    notes: tuple = ()

    def to_json_obj(self):
        return {
            "task": self.task,
            "strategy": self.strategy,
            "chosen": [f.render() for f in self.chosen],
            "report": self.report.to_json_obj(),
            "notes": list(self.notes),
        }


def _aligned_column(pm, st, task):
    _, y = join(pm, st, task)  # validates the model sets line up
    return y


def all_layers_one_task(pm, st, task, probing_task, cfg, method=ProbeMethod.BEST_BY_DEV, single_draw=False):
    """Regress one fine-tune task on every layer of one probing task."""
    y = _aligned_column(pm, st, task)
    chosen = tuple(f for f in pm.with_method(method) if f.task == probing_task)
    if not chosen:
        raise UnknownTask(f"no {method.value} features for probing task {probing_task!r}")
    report = regression_report(task, chosen, pm.restrict(chosen), y, cfg, single_draw)
    return SelectionResult(task=task, strategy=f"all_layers:{probing_task}", chosen=chosen, report=report)


def choose_layers(anova_tables, alpha=0.05):
    """One layer per probing task, by count of tasks where it tests significant.

    anova_tables: {fine_tune_task: {probing_task: AnovaTable}}.  Ties go to
    the lowest layer.  A probing task with no significant layer anywhere
    falls back to the layer with the smallest minimum p-value; the returned
    flag records that.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueOutOfRange(f"alpha must lie in (0, 1), got {alpha}")
    probing_tasks = None
    for by_probe in anova_tables.values():
        names = sorted(by_probe)
        if probing_tasks is None:
            probing_tasks = names
        elif probing_tasks != names:
            raise UnknownTask("per-task ANOVA grids cover different probing tasks")
    if not probing_tasks:
        raise UnknownTask("no ANOVA tables given")

    out = {}
    for probing_task in probing_tasks:
        counts = {}
        min_p = {}
        for by_probe in anova_tables.values():
            for row in by_probe[probing_task].rows:
                layer = row.feature.layer
                counts.setdefault(layer, 0)
                if row.p_value < alpha:
                    counts[layer] += 1
                prev = min_p.get(layer)
                if prev is None or row.p_value < prev:
                    min_p[layer] = row.p_value
        best = max(counts.values())
        if best > 0:
            layer = min(l for l, c in counts.items() if c == best)
            out[probing_task] = (layer, False)
        else:
            smallest = min(min_p.values())
            layer = min(l for l, p in min_p.items() if p == smallest)
            out[probing_task] = (layer, True)
    return out


def one_layer_per_task(anova_tables, pm, st, cfg, alpha=0.05, method=ProbeMethod.BEST_BY_DEV, single_draw=False):
    """One ANOVA-voted layer per probing task, regressed on every fine-tune task.

    The layer vote looks at fine-tune scores, so the resulting reductions are
    optimistically biased; the note on each result says so.
    """
    layers = choose_layers(anova_tables, alpha)
    chosen = tuple(FeatureId(p, layer, method) for p, (layer, _) in sorted(layers.items()))
    notes = ["layer vote uses fine-tune scores; reductions are optimistically biased"]
    for p, (layer, fell_back) in sorted(layers.items()):
        if fell_back:
            notes.append(f"no significant layer for {p}; using smallest min-p layer {layer}")
    out = {}
    for task in st.tasks:
        y = _aligned_column(pm, st, task)
        report = regression_report(task, chosen, pm.restrict(chosen), y, cfg, single_draw)
        out[task] = SelectionResult(
            task=task, strategy="one_layer_per_task", chosen=chosen, report=report, notes=tuple(notes)
        )
    return out


def subset_count(n, k):
    return math.comb(n, k)


def best_k_search(pm, st, task, k, cfg, method=ProbeMethod.BEST_BY_DEV, objective="cv", single_draw=False):
    """Exhaustive search over all k-subsets of the probe columns.

    Candidates are enumerated in lexicographic order over the canonical
    column order and scored by the configured objective (held-out SSE by
    default, training SSE behind the flag); the first minimum wins, so ties
    break toward the lexicographically smallest subset.  The winner's report
    is recomputed through the ordinary cross-validation path.
    """
    if objective not in ("cv", "train"):
        raise ValueOutOfRange(f"objective must be 'cv' or 'train', got {objective!r}")
    y = _aligned_column(pm, st, task)
    feats = pm.with_method(method)
    n = len(feats)
    if n == 0:
        raise UnknownTask(f"no {method.value} features in probe matrix")
    if k < 1:
        raise ValueOutOfRange(f"k must be >= 1, got {k}")
    if k > n:
        raise KTooLarge(f"k={k} exceeds the {n} available features")
    n_subsets = subset_count(n, k)
    if n_subsets > cfg.subset_cap:
        raise CapExceeded(f"C({n},{k}) = {n_subsets} exceeds the cap of {cfg.subset_cap}")

    X = pm.restrict(feats)
    subsets = np.array(list(itertools.combinations(range(n), k)), dtype=np.int64)
    kern = backend.search_kernels()
    if objective == "cv":
        fold_ids = fold_assignments(X.shape[0], cfg)
        scores = kern.cv_sse(X, y, fold_ids, cfg.folds, subsets)
    else:
        scores = kern.train_sse(X, y, subsets)
    winner = int(np.argmin(scores))
    chosen = tuple(feats[j] for j in subsets[winner])
    report = regression_report(task, chosen, pm.restrict(chosen), y, cfg, single_draw)
    notes = () if objective == "cv" else ("ranked by training SSE",)
    return SelectionResult(task=task, strategy=f"best_{k}", chosen=chosen, report=report, notes=notes)
