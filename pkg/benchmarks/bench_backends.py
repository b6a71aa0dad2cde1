"""Timing comparison of the compiled and pure-numpy kernel backends.

Times the two hot paths, exhaustive subset search and the classifier
battery, on synthetic inputs of adjustable size.  The first compiled run
includes JIT compilation (cached on disk afterwards), so each measurement
reports a separate warm-up pass and then the best of ``--repeat`` timed
passes.

    python3 benchmarks/bench_backends.py
    python3 benchmarks/bench_backends.py --models 30 --features 120 --k 3
"""

import argparse
import time

from probe_oracle import backend, probekit, selection, synth
from probe_oracle.datamodel import StudyConfig


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--models", type=int, default=25)
    ap.add_argument("--features", type=int, default=84)
    ap.add_argument("--k", type=int, default=3)
    ap.add_argument("--per-class", type=int, default=700)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    study = synth.gen_planted_study(
        seed=args.seed, n_models=args.models, n_features=args.features, k_true=args.k
    )
    cfg = StudyConfig(seed=args.seed, subset_cap=10_000_000)
    n_subsets = selection.subset_count(args.features, args.k)
    blobs = synth.gen_embeddings("blobs", dim=8, n_per_class=args.per_class, seed=args.seed)
    battery_cfg = StudyConfig(seed=args.seed, samples_per_class=max(1, int(0.7 * args.per_class) - 10))

    print(f"search: {args.models} models, {args.features} features, "
          f"best-{args.k} over {n_subsets} subsets")
    print(f"battery: 7 classifiers, dim 8, {args.per_class} points per class")
    print(f"timing: best of {args.repeat} after one warm-up pass\n")

    results = {}
    for flavor in ("numpy", "numba"):
        backend.set_backend(flavor)

        def run_search():
            selection.best_k_search(study.pm, study.st, "T0", args.k, cfg)

        def run_battery():
            probekit.run_battery(blobs, battery_cfg, task="blobs")

        t0 = time.perf_counter()
        run_search()
        warm_search = time.perf_counter() - t0
        t0 = time.perf_counter()
        run_battery()
        warm_battery = time.perf_counter() - t0
        s = best_of(run_search, args.repeat)
        b = best_of(run_battery, args.repeat)
        results[flavor] = (s, b)
        print(f"{flavor:>6}: search {s * 1e3:9.1f} ms (first pass {warm_search:.2f} s)   "
              f"battery {b * 1e3:9.1f} ms (first pass {warm_battery:.2f} s)")

    s_np, b_np = results["numpy"]
    s_nb, b_nb = results["numba"]
    print(f"\nspeedup (numpy/numba): search {s_np / s_nb:.2f}x, battery {b_np / b_nb:.2f}x")


if __name__ == "__main__":
    main()
