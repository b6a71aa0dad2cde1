"""Command line front end.

Report payloads (CSV tables or JSON) are bit-for-bit reproducible for a given
command line and seed: anything volatile (wall time) lives only in the
manifest sidecar written next to --out files.  Exit codes: 0 success, 1 usage,
2 bad input data, 3 internal failure.
"""

import argparse
import csv
import hashlib
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, anova, backend, fingerprint, linreg, probekit, selection, synth
from .datamodel import (
    EmbeddingDataset,
    ModelId,
    ProbeMatrix,
    ProbeMethod,
    ScoreTable,
    StudyConfig,
    join,
)
from .errors import DataError, MalformedFile, ProbeOracleError, ValueOutOfRange


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _method_arg(text):
    for m in ProbeMethod:
        if m.value == text:
            return m
    raise argparse.ArgumentTypeError(f"unknown probe method {text!r}")


def _add_common(sub):
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--folds", type=int, default=5)
    sub.add_argument("--control-draws", type=int, default=100)
    sub.add_argument("--single-draw", action="store_true", help="one control draw instead of the mean over draws")
    sub.add_argument("--threads", type=int, default=None)
    sub.add_argument("--json", action="store_true", help="full-precision JSON instead of CSV")
    sub.add_argument("--out", default="-", help="output path, '-' for stdout")


def build_parser():
    p = _Parser(prog="probe-oracle", description="Predict fine-tuning performance from probing accuracies.")
    p.add_argument("--version", action="version", version=f"probe-oracle {__version__}")
    subs = p.add_subparsers(dest="cmd", required=True)

    s = subs.add_parser("probe", help="run the classifier battery over an embedding directory")
    s.add_argument("--embeddings", required=True, help="directory of .pemb files")
    s.add_argument("--samples-per-class", type=int, default=1200)
    _add_common(s)

    s = subs.add_parser("regress", help="all-layers-one-task regressions for every probing task")
    s.add_argument("--matrix", required=True)
    s.add_argument("--scores", required=True)
    s.add_argument("--method", type=_method_arg, default=ProbeMethod.BEST_BY_DEV)
    _add_common(s)

    s = subs.add_parser("anova", help="sequential ANOVA of layers, per probing and fine-tune task")
    s.add_argument("--matrix", required=True)
    s.add_argument("--scores", required=True)
    s.add_argument("--method", type=_method_arg, default=ProbeMethod.BEST_BY_DEV)
    s.add_argument("--alpha", type=float, default=0.05)
    s.add_argument("--compress-ranges", action="store_true")
    _add_common(s)

    s = subs.add_parser("one-layer", help="one ANOVA-voted layer per probing task, regressed jointly")
    s.add_argument("--matrix", required=True)
    s.add_argument("--scores", required=True)
    s.add_argument("--method", type=_method_arg, default=ProbeMethod.BEST_BY_DEV)
    s.add_argument("--alpha", type=float, default=0.05)
    _add_common(s)

    s = subs.add_parser("select", help="exhaustive best-k feature subset per fine-tune task")
    s.add_argument("--matrix", required=True)
    s.add_argument("--scores", required=True)
    s.add_argument("--method", type=_method_arg, default=ProbeMethod.BEST_BY_DEV)
    s.add_argument("--k", type=int, default=3)
    s.add_argument("--task", default=None, help="restrict to one fine-tune task")
    s.add_argument("--objective", choices=("cv", "train"), default="cv")
    s.add_argument("--cap", type=int, default=10_000_000)
    _add_common(s)

    s = subs.add_parser("ablate-method", help="best reduction per classifier method")
    s.add_argument("--matrix", required=True)
    s.add_argument("--scores", required=True)
    s.add_argument("--k", type=int, default=3)
    s.add_argument("--cap", type=int, default=10_000_000)
    _add_common(s)

    s = subs.add_parser("mc", help="control-baseline spread at several feature counts")
    s.add_argument("--scores", required=True)
    s.add_argument("--features", default="3,7,12", help="comma-separated feature counts")
    _add_common(s)

    s = subs.add_parser("fingerprint", help="family separability of probe features vs random controls")
    s.add_argument("--matrix", required=True)
    s.add_argument("--method", type=_method_arg, default=ProbeMethod.BEST_BY_DEV)
    s.add_argument("--k", type=int, default=3)
    s.add_argument("--cap", type=int, default=10_000_000)
    s.add_argument("--per-subset", action="store_true", help="include per-subset accuracies (large)")
    _add_common(s)

    s = subs.add_parser("synth", help="generate synthetic studies or embedding sets")
    s.add_argument("--kind", required=True, choices=("study", "null-study", "blobs", "xor", "null"))
    s.add_argument("--models", type=int, default=25)
    s.add_argument("--features", type=int, default=84)
    s.add_argument("--k-true", type=int, default=3)
    s.add_argument("--noise", type=float, default=0.0)
    s.add_argument("--tasks", type=int, default=1)
    s.add_argument("--dim", type=int, default=8)
    s.add_argument("--per-class", type=int, default=500)
    s.add_argument("--separation", type=float, default=4.0)
    s.add_argument("--classes", type=int, default=2)
    s.add_argument("--out-dir", required=True)
    _add_common(s)

    s = subs.add_parser("summary", help="descriptive statistics of a score table")
    s.add_argument("--scores", required=True)
    _add_common(s)

    return p


# ---------------------------------------------------------------------------
# output helpers

def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _manifest(args, inputs):
    cfg = {
        "seed": args.seed,
        "folds": args.folds,
        "control_draws": args.control_draws,
        "single_draw": bool(args.single_draw),
        "backend": backend.backend_name(),
    }
    return {
        "tool": "probe-oracle",
        "version": __version__,
        "config": cfg,
        "inputs": {str(p): _sha256(p) for p in inputs},
    }


def _emit(args, manifest, csv_rows, json_obj, started):
    """Write the report; volatile fields go only to the sidecar manifest."""
    if args.json:
        payload = json.dumps({"manifest": manifest, "report": json_obj}, indent=1)
        payload += "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for row in csv_rows:
            w.writerow(row)
        payload = buf.getvalue()
    if args.out == "-":
        sys.stdout.write(payload)
        print(json.dumps({"manifest": manifest}), file=sys.stderr)
    else:
        Path(args.out).write_text(payload, encoding="utf-8")
        sidecar = dict(manifest)
        sidecar["command"] = list(sys.argv[1:]) if sys.argv[1:] else [args.cmd]
        sidecar["wall_time_seconds"] = time.monotonic() - started
        Path(str(args.out) + ".manifest.json").write_text(
            json.dumps(sidecar, indent=1) + "\n", encoding="utf-8"
        )


def _pct(x):
    return f"{x:.2f}"


def _cfg_from(args, cap=None):
    kw = {"seed": args.seed, "folds": args.folds, "control_draws": args.control_draws}
    if cap is not None:
        kw["subset_cap"] = cap
    return StudyConfig(**kw)


# ---------------------------------------------------------------------------
# subcommands

def _run_probe(args, started):
    root = Path(args.embeddings)
    if not root.is_dir():
        raise MalformedFile(f"{root} is not a directory")
    paths = sorted(root.glob("*.pemb"))
    if not paths:
        raise MalformedFile(f"no .pemb files under {root}")
    datasets = {}
    for path in paths:
        ds = EmbeddingDataset.load(path)
        meta = ds.metadata
        try:
            key = (ModelId.parse(str(meta["model"])), str(meta["task"]), int(meta["layer"]))
        except (KeyError, TypeError, ValueError):
            raise MalformedFile(f"{path}: metadata must carry model, task and layer") from None
        if key in datasets:
            raise MalformedFile(f"{path}: duplicate dataset for {key}")
        datasets[key] = ds
    cfg = StudyConfig(
        seed=args.seed, folds=args.folds, control_draws=args.control_draws,
        samples_per_class=args.samples_per_class,
    )
    pm = probekit.build_probe_matrix(datasets, cfg)
    manifest = _manifest(args, paths)
    rows = [["model"] + [f.render() for f in pm.features]]
    for i, m in enumerate(pm.models):
        rows.append([m.render()] + [repr(float(v)) for v in pm.values[i]])
    _emit(args, manifest, rows, pm.to_json_obj(), started)


def _load_study(args):
    pm = ProbeMatrix.load(args.matrix)
    st = ScoreTable.load(args.scores)
    return pm, st


def _run_regress(args, started):
    pm, st = _load_study(args)
    cfg = _cfg_from(args)
    probing_tasks = sorted({f.task for f in pm.with_method(args.method)})
    if not probing_tasks:
        raise ValueOutOfRange(f"matrix has no {args.method.value} features")
    results = {}
    for p in probing_tasks:
        for t in st.tasks:
            results[(p, t)] = selection.all_layers_one_task(
                pm, st, t, p, cfg, args.method, args.single_draw
            )
    header = ["probing_task"] + [f"reduction_{t}" for t in st.tasks] + ["average"]
    header += [f"rmse_{t}" for t in st.tasks]
    rows = [header]
    for p in probing_tasks:
        reds = [results[(p, t)].report.rmse_reduction for t in st.tasks]
        rmses = [results[(p, t)].report.rmse_cv for t in st.tasks]
        rows.append([p] + [_pct(r) for r in reds] + [_pct(float(np.mean(reds)))] + [f"{v:.4f}" for v in rmses])
    obj = [results[(p, t)].to_json_obj() for p in probing_tasks for t in st.tasks]
    _emit(args, _manifest(args, [args.matrix, args.scores]), rows, obj, started)


def _anova_grid(pm, st, method):
    grid = {}
    probing_tasks = sorted({f.task for f in pm.with_method(method)})
    if not probing_tasks:
        raise ValueOutOfRange(f"matrix has no {method.value} features")
    for t in st.tasks:
        _, y = join(pm, st, t)
        by_probe = {}
        for p in probing_tasks:
            feats = tuple(f for f in pm.with_method(method) if f.task == p)
            X = pm.restrict(feats)
            by_probe[p] = anova.anova_sequential(X, y, feats)
        grid[t] = by_probe
    return grid, probing_tasks


def _run_anova(args, started):
    pm, st = _load_study(args)
    grid, probing_tasks = _anova_grid(pm, st, args.method)
    sig = anova.significant_layers(grid, args.alpha)
    rows = [["probing_task"] + list(st.tasks)]
    for p in probing_tasks:
        rows.append([p] + [anova.render_layers(sig[p][t], args.compress_ranges) for t in st.tasks])
    obj = {
        "significant": {p: {t: list(sig[p][t]) for t in st.tasks} for p in probing_tasks},
        "tables": {t: {p: grid[t][p].to_json_obj() for p in probing_tasks} for t in st.tasks},
    }
    _emit(args, _manifest(args, [args.matrix, args.scores]), rows, obj, started)


def _run_one_layer(args, started):
    pm, st = _load_study(args)
    cfg = _cfg_from(args)
    grid, _ = _anova_grid(pm, st, args.method)
    results = selection.one_layer_per_task(grid, pm, st, cfg, args.alpha, args.method, args.single_draw)
    chosen = results[st.tasks[0]].chosen
    header = [f"reduction_{t}" for t in st.tasks] + ["average"]
    header += [f"chosen_{f.task}" for f in chosen]
    reds = [results[t].report.rmse_reduction for t in st.tasks]
    rows = [header, [_pct(r) for r in reds] + [_pct(float(np.mean(reds)))] + [str(f.layer) for f in chosen]]
    obj = {t: results[t].to_json_obj() for t in st.tasks}
    _emit(args, _manifest(args, [args.matrix, args.scores]), rows, obj, started)


def _run_select(args, started):
    pm, st = _load_study(args)
    cfg = _cfg_from(args, cap=args.cap)
    tasks = [args.task] if args.task else list(st.tasks)
    results = {
        t: selection.best_k_search(pm, st, t, args.k, cfg, args.method, args.objective, args.single_draw)
        for t in tasks
    }
    header = ["strategy"] + [f"reduction_{t}" for t in tasks] + ["average"]
    header += [f"chosen_{t}" for t in tasks]
    reds = [results[t].report.rmse_reduction for t in tasks]
    chosen = [";".join(f.render() for f in results[t].chosen) for t in tasks]
    rows = [header, [f"best_{args.k}"] + [_pct(r) for r in reds] + [_pct(float(np.mean(reds)))] + chosen]
    obj = {t: results[t].to_json_obj() for t in tasks}
    _emit(args, _manifest(args, [args.matrix, args.scores]), rows, obj, started)


def _run_ablate(args, started):
    pm, st = _load_study(args)
    cfg = _cfg_from(args, cap=args.cap)
    methods = [m for m in ProbeMethod if pm.with_method(m)]
    rows = [["method"] + list(st.tasks) + ["average"]]
    detail = {}
    for m in methods:
        probing_tasks = sorted({f.task for f in pm.with_method(m)})
        best = {}
        for t in st.tasks:
            candidates = []
            for p in probing_tasks:
                r = selection.all_layers_one_task(pm, st, t, p, cfg, m, args.single_draw)
                candidates.append((r.report.rmse_reduction, r.strategy))
            r = selection.best_k_search(pm, st, t, args.k, cfg, m, "cv", args.single_draw)
            candidates.append((r.report.rmse_reduction, r.strategy))
            best[t] = max(candidates)
        reds = [best[t][0] for t in st.tasks]
        rows.append([m.value] + [_pct(r) for r in reds] + [_pct(float(np.mean(reds)))])
        detail[m.value] = {t: {"reduction": best[t][0], "strategy": best[t][1]} for t in st.tasks}
    _emit(args, _manifest(args, [args.matrix, args.scores]), rows, detail, started)


def _run_mc(args, started):
    st = ScoreTable.load(args.scores)
    cfg = _cfg_from(args)
    try:
        counts = [int(x) for x in args.features.split(",") if x.strip()]
    except ValueError:
        raise ValueOutOfRange(f"bad --features list: {args.features!r}") from None
    if not counts:
        raise ValueOutOfRange("--features must name at least one count")
    rows = [["task"] + [f"ratio_pct_{n}" for n in counts]]
    obj = {}
    for t in st.tasks:
        y = st.column(t)
        per = {n: linreg.mc_uncertainty(y, n, cfg, t) for n in counts}
        rows.append([t] + [_pct(per[n]["ratio_pct"]) for n in counts])
        obj[t] = {str(n): {k: v for k, v in per[n].items() if k != "draws"} for n in counts}
    _emit(args, _manifest(args, [args.scores]), rows, obj, started)


def _run_fingerprint(args, started):
    pm = ProbeMatrix.load(args.matrix)
    cfg = _cfg_from(args, cap=args.cap)
    rep = fingerprint.fingerprint(pm, args.k, cfg, args.method, return_details=args.per_subset)
    rows = [
        ["n_subsets", "k", "mean_diff", "sd_diff", "t", "dof", "p_one_sided",
         "max_probe_accuracy", "trivial_baseline", "stratified"],
        [rep.n_subsets, rep.k, repr(rep.mean_diff), repr(rep.sd_diff), repr(rep.t_stat),
         rep.dof, repr(rep.p_value), repr(rep.max_probe_accuracy), repr(rep.trivial_baseline),
         int(rep.stratified)],
    ]
    if args.per_subset:
        rows.append([])
        rows.append(["subset", "probe_accuracy", "control_accuracy"])
        for label, pa, ca in rep.per_subset:
            rows.append([label, repr(pa), repr(ca)])
    _emit(args, _manifest(args, [args.matrix]), rows, rep.to_json_obj(include_details=args.per_subset), started)


def _run_synth(args, started):
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = _manifest(args, [])
    if args.kind in ("study", "null-study"):
        if args.kind == "study":
            study = synth.gen_planted_study(
                seed=args.seed, n_models=args.models, n_features=args.features,
                k_true=args.k_true, noise_sigma=args.noise, n_tasks=args.tasks,
            )
            truth = study.truth_obj()
        else:
            study = synth.gen_null_study(
                seed=args.seed, n_models=args.models, n_features=args.features, n_tasks=args.tasks
            )
            truth = {"kind": "null-study"}
        study.pm.save_csv(out_dir / "probe_matrix.csv")
        study.st.save_csv(out_dir / "score_table.csv")
        (out_dir / "truth.json").write_text(json.dumps(truth, indent=1) + "\n", encoding="utf-8")
        written = ["probe_matrix.csv", "score_table.csv", "truth.json"]
    else:
        ds = synth.gen_embeddings(
            args.kind, dim=args.dim, n_per_class=args.per_class,
            separation=args.separation, seed=args.seed, classes=args.classes,
        )
        name = f"{args.kind}_d{args.dim}_n{args.per_class}_s{args.seed}.pemb"
        ds.save(out_dir / name)
        written = [name]
    payload = {"written": written, "out_dir": str(out_dir)}
    sidecar = dict(manifest)
    sidecar["command"] = list(sys.argv[1:]) if sys.argv[1:] else [args.cmd]
    sidecar["wall_time_seconds"] = time.monotonic() - started
    (out_dir / "manifest.json").write_text(json.dumps(sidecar, indent=1) + "\n", encoding="utf-8")
    print(json.dumps({"manifest": manifest, "result": payload} if args.json else payload))


def _run_summary(args, started):
    st = ScoreTable.load(args.scores)
    rows = [["task", "count", "mean", "std", "min", "q25", "median", "q75", "max"]]
    obj = {}
    for t in st.tasks:
        y = st.column(t)
        qs = np.quantile(y, [0.25, 0.5, 0.75])
        stats = {
            "count": int(y.size),
            "mean": float(y.mean()),
            "std": float(y.std(ddof=1)) if y.size > 1 else 0.0,
            "min": float(y.min()),
            "q25": float(qs[0]),
            "median": float(qs[1]),
            "q75": float(qs[2]),
            "max": float(y.max()),
        }
        obj[t] = stats
        rows.append([t, stats["count"]] + [f"{stats[k]:.4f}" for k in ("mean", "std", "min", "q25", "median", "q75", "max")])
    _emit(args, _manifest(args, [args.scores]), rows, obj, started)


_RUNNERS = {
    "probe": _run_probe,
    "regress": _run_regress,
    "anova": _run_anova,
    "one-layer": _run_one_layer,
    "select": _run_select,
    "ablate-method": _run_ablate,
    "mc": _run_mc,
    "fingerprint": _run_fingerprint,
    "synth": _run_synth,
    "summary": _run_summary,
}


def main(argv=None):
    started = time.monotonic()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return 0 if exc.code in (0, None) else 1
    try:
        backend.set_threads(args.threads if args.threads is not None else backend.default_threads())
        _RUNNERS[args.cmd](args, started)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ProbeOracleError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
