"""Writer for the .pemb embedding container format.

Layout (little-endian throughout): magic ``PEMB``, then ``<HII`` version,
vector dimension and class count; per split (train, dev, test in that
order) a ``<BQ`` split tag and row count followed by packed records of one
``<u4`` label and ``dim`` ``<f4`` vector components each; finally a ``<Q``
byte length and a canonical JSON metadata block (sorted keys, no spaces).
The format is shared with the probing toolkit, which is the intended
consumer; files written here are byte-identical to ones its own serializer
would produce from the same arrays.
"""

import json
import struct

import numpy as np

from .errors import FormatError

MAGIC = b"PEMB"
VERSION = 1
SPLIT_NAMES = ("train", "dev", "test")


def write_pemb(path, dim, class_count, splits, metadata):
    """Validate and write one dataset; raises FormatError on bad content."""
    if dim < 1:
        raise FormatError(f"dim must be >= 1, got {dim}")
    if class_count < 2:
        raise FormatError(f"class_count must be >= 2, got {class_count}")
    if set(splits) != set(SPLIT_NAMES):
        raise FormatError(f"splits must be exactly {SPLIT_NAMES}, got {sorted(splits)}")
    norm = {}
    for name in SPLIT_NAMES:
        x, y = splits[name]
        x = np.ascontiguousarray(np.asarray(x, dtype=np.float32))
        y = np.ascontiguousarray(np.asarray(y, dtype=np.int32))
        if x.ndim != 2 or x.shape[1] != dim:
            raise FormatError(f"{name} vectors must be (n, {dim}), got {x.shape}")
        if y.shape != (x.shape[0],):
            raise FormatError(f"{name} labels must align with vectors")
        if not np.isfinite(x).all():
            raise FormatError(f"{name} vectors contain non-finite values")
        if y.size and (y.min() < 0 or y.max() >= class_count):
            raise FormatError(f"{name} labels must lie in [0, {class_count})")
        norm[name] = (x, y)
    xtr, ytr = norm["train"]
    if xtr.shape[0] == 0:
        raise FormatError("train split is empty")
    if len(np.unique(ytr)) != class_count:
        raise FormatError("every class must appear in the train split")
    seen = {}
    for name in SPLIT_NAMES:
        x, _ = norm[name]
        for row in x:
            key = row.tobytes()
            prev = seen.get(key)
            if prev is not None and prev != name:
                raise FormatError(f"identical vector appears in splits {prev!r} and {name!r}")
            seen[key] = name

    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<HII", VERSION, dim, class_count))
        rec = np.dtype([("label", "<u4"), ("vec", "<f4", (dim,))])
        for tag, name in enumerate(SPLIT_NAMES):
            x, y = norm[name]
            fh.write(struct.pack("<BQ", tag, x.shape[0]))
            block = np.zeros(x.shape[0], dtype=rec)
            block["label"] = y.astype(np.uint32)
            block["vec"] = x
            fh.write(block.tobytes())
        meta = json.dumps(metadata, sort_keys=True, separators=(",", ":")).encode("utf-8")
        fh.write(struct.pack("<Q", len(meta)))
        fh.write(meta)
