"""Tab-separated sentence-classification files and stratified subsampling.

Expected line shape: ``split<TAB>label<TAB>sentence``.  Split tokens may be
the short forms ``tr``/``va``/``te`` or the long forms
``train``/``dev``/``test``.  Labels are arbitrary strings; class indices
are assigned by sorting the distinct labels of the whole file.
"""

import numpy as np

from .errors import FormatError

_SPLIT_ALIASES = {
    "tr": "train", "va": "dev", "te": "test",
    "train": "train", "dev": "dev", "test": "test",
}
SPLIT_NAMES = ("train", "dev", "test")

# fixed stream tag separating subsampling from any other seeded draw
_SUBSAMPLE_TAG = 11


def read_task_file(path):
    """Parse into ({split: [(label, sentence), ...]}, {label: class_index})."""
    rows = {name: [] for name in SPLIT_NAMES}
    labels = set()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from None
    for lineno, line in enumerate(lines, start=1):
        if not line:
            continue
        parts = line.split("\t", 2)
        if len(parts) != 3:
            raise FormatError(f"{path}:{lineno}: expected split<TAB>label<TAB>sentence")
        split_tok, label, sentence = parts
        split = _SPLIT_ALIASES.get(split_tok)
        if split is None:
            raise FormatError(f"{path}:{lineno}: unknown split token {split_tok!r}")
        if not sentence.strip():
            raise FormatError(f"{path}:{lineno}: empty sentence")
        rows[split].append((label, sentence))
        labels.add(label)
    if len(labels) < 2:
        raise FormatError(f"{path}: need at least 2 distinct labels, found {sorted(labels)}")
    for name in SPLIT_NAMES:
        if not rows[name]:
            raise FormatError(f"{path}: split {name!r} has no rows")
    label_map = {lab: i for i, lab in enumerate(sorted(labels))}
    return rows, label_map


def subsample_split(rows, label_map, per_class, seed, split_index):
    """Seeded stratified pick of per_class row indices per label, sorted.

    Selection happens on indices alone, before any model work, so the cost
    of everything downstream scales with per_class.
    """
    by_class = {c: [] for c in range(len(label_map))}
    for i, (label, _) in enumerate(rows):
        by_class[label_map[label]].append(i)
    short = {c: len(idx) for c, idx in by_class.items() if len(idx) < per_class}
    if short:
        counts = ", ".join(f"class {c}: {n}" for c, n in sorted(short.items()))
        raise FormatError(
            f"insufficient samples for {per_class} per class in split {SPLIT_NAMES[split_index]} ({counts})"
        )
    gen = np.random.default_rng([seed, _SUBSAMPLE_TAG, split_index])
    chosen = []
    for c in range(len(label_map)):
        idx = np.asarray(by_class[c], dtype=np.int64)
        chosen.append(gen.choice(idx, size=per_class, replace=False))
    return np.sort(np.concatenate(chosen))
