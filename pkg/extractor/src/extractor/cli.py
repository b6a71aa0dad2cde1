"""Command line front end.

    pemb-extract --model <id-or-path> --task-file <tsv> --layers 1-12 \
        --samples-per-class 1200 --seed 42 --out <dir>

Exit codes: 0 success, 1 usage error, 2 extraction/data error, 3 internal.
"""

import argparse
import json
import sys

from .errors import ExtractorError
from .extract import ExtractionJob, extract


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def parse_layers(text):
    """'1-12', '3', or comma-joined mixes like '1,4-6'."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            raise _UsageError(f"empty layer token in {text!r}")
        if "-" in part:
            lo, _, hi = part.partition("-")
            try:
                lo, hi = int(lo), int(hi)
            except ValueError:
                raise _UsageError(f"bad layer range {part!r}") from None
            if hi < lo:
                raise _UsageError(f"descending layer range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            try:
                out.append(int(part))
            except ValueError:
                raise _UsageError(f"bad layer {part!r}") from None
    return tuple(out)


def build_parser():
    p = _Parser(prog="pemb-extract", description=__doc__.splitlines()[0])
    p.add_argument("--model", required=True, help="checkpoint name or local path")
    p.add_argument("--task-file", required=True, help="tab-separated split/label/sentence file")
    p.add_argument("--layers", required=True, help="1-based blocks, e.g. 1-12 or 1,4,9")
    p.add_argument("--samples-per-class", type=int, default=1200)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--model-tag", default="", help="identifier written into file metadata")
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        job = ExtractionJob(
            model=args.model,
            task_file=args.task_file,
            layers=parse_layers(args.layers),
            samples_per_class=args.samples_per_class,
            seed=args.seed,
            out_dir=args.out,
            batch_size=args.batch_size,
            model_tag=args.model_tag,
        )
        summary = extract(job)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ExtractorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 3
    print(json.dumps({
        "written": list(summary.files),
        "sentences": summary.n_sentences,
        "per_split": summary.per_split,
        "truncated": summary.truncated,
        "dim": summary.dim,
        "classes": summary.class_count,
    }))
    return 0


if __name__ == "__main__":
    sys.exit(main())
