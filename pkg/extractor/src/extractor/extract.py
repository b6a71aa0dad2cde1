"""Cache per-layer first-token transformer representations as .pemb files.

One forward pass per sentence yields every requested layer at once; the
first-token vector of each is collected and written per layer.  Sentence
selection (seeded, stratified, per split) happens on indices before the
model is even loaded, so the compute bill scales with samples_per_class.
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import pembio, senteval
from .errors import FormatError, LayerOutOfRange, ModelLoadError

logger = logging.getLogger("extractor")

_TAG_OK = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789.+-"


def sanitize_tag(text):
    """Fold an arbitrary identifier into the toolkit's name grammar."""
    out = "".join(c if c in _TAG_OK else "-" for c in str(text).replace("_", "-"))
    out = out.strip("-.")
    if not out or not out[0].isalpha():
        out = "x" + out
    return out


@dataclass(frozen=True)
class ExtractionJob:
    model: str
    task_file: str
    layers: tuple
    samples_per_class: int = 1200
    seed: int = 42
    out_dir: str = "."
    batch_size: int = 32
    model_tag: str = ""

    def __post_init__(self):
        layers = tuple(int(v) for v in self.layers)
        if not layers:
            raise FormatError("at least one layer must be requested")
        if len(set(layers)) != len(layers):
            raise FormatError(f"duplicate layers in {layers}")
        for v in layers:
            if v < 1:
                raise LayerOutOfRange(f"layers are 1-based over transformer blocks, got {v}")
        object.__setattr__(self, "layers", tuple(sorted(layers)))
        if self.samples_per_class < 1:
            raise FormatError(f"samples_per_class must be >= 1, got {self.samples_per_class}")
        if self.batch_size < 1:
            raise FormatError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass(frozen=True)
class ExtractionSummary:
    files: tuple
    n_sentences: int
    per_split: dict
    truncated: int
    dim: int
    class_count: int
    labels: tuple


def _load_model(spec):
    try:
        import torch
        from transformers import AutoModel, AutoTokenizer
    except ImportError as exc:
        raise ModelLoadError(f"torch/transformers unavailable: {exc}") from None
    try:
        tok = AutoTokenizer.from_pretrained(spec)
        model = AutoModel.from_pretrained(spec)
    except Exception as exc:
        raise ModelLoadError(f"cannot load {spec!r}: {exc}") from None
    model.eval()
    # single-threaded matmul keeps reduction order, and output bytes, fixed
    torch.set_num_threads(1)
    return torch, tok, model


def _max_length(tok, model):
    limit = getattr(tok, "model_max_length", None)
    if limit is None or limit > 10**6:
        limit = getattr(model.config, "max_position_embeddings", 512)
    return int(limit)


def extract(job):
    """Run one job; returns an ExtractionSummary, files written per layer."""
    rows, label_map = senteval.read_task_file(job.task_file)
    picked = {}
    for si, name in enumerate(senteval.SPLIT_NAMES):
        idx = senteval.subsample_split(rows[name], label_map, job.samples_per_class, job.seed, si)
        picked[name] = [rows[name][i] for i in idx]

    torch, tok, model = _load_model(job.model)
    n_blocks = int(model.config.num_hidden_layers)
    for layer in job.layers:
        if layer > n_blocks:
            raise LayerOutOfRange(f"model has {n_blocks} blocks, layer {layer} requested")
    max_len = _max_length(tok, model)

    dim = int(model.config.hidden_size)
    vecs = {name: {layer: [] for layer in job.layers} for name in senteval.SPLIT_NAMES}
    labels = {}
    truncated = 0
    n_total = 0
    with torch.inference_mode():
        for name in senteval.SPLIT_NAMES:
            pairs = picked[name]
            labels[name] = np.array([label_map[lab] for lab, _ in pairs], dtype=np.int32)
            for start in range(0, len(pairs), job.batch_size):
                batch = [s for _, s in pairs[start : start + job.batch_size]]
                plain = tok(batch, add_special_tokens=True, truncation=False, padding=False)
                truncated += sum(len(ids) > max_len for ids in plain["input_ids"])
                enc = tok(batch, padding=True, truncation=True, max_length=max_len, return_tensors="pt")
                out = model(**enc, output_hidden_states=True)
                hidden = out.hidden_states  # (embeddings, block 1, ..., block n)
                for layer in job.layers:
                    vecs[name][layer].append(hidden[layer][:, 0, :].to(torch.float32).numpy())
                n_total += len(batch)
    if truncated:
        logger.info("truncated %d of %d sentences to %d tokens", truncated, n_total, max_len)

    task = sanitize_tag(Path(job.task_file).stem)
    tag = sanitize_tag(job.model_tag) if job.model_tag else sanitize_tag(Path(str(job.model)).name)
    out_dir = Path(job.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    label_names = tuple(sorted(label_map))
    files = []
    for layer in job.layers:
        splits = {
            name: (np.vstack(vecs[name][layer]), labels[name])
            for name in senteval.SPLIT_NAMES
        }
        meta = {
            "model": tag,
            "task": task,
            "layer": layer,
            "source": str(job.model),
            "task_file": Path(job.task_file).name,
            "hidden_size": dim,
            "num_layers": n_blocks,
            "samples_per_class": job.samples_per_class,
            "seed": job.seed,
            "truncated": truncated,
            "labels": list(label_names),
        }
        path = out_dir / f"{task}_layer{layer:02d}.pemb"
        pembio.write_pemb(path, dim, len(label_map), splits, meta)
        files.append(str(path))

    return ExtractionSummary(
        files=tuple(files),
        n_sentences=n_total,
        per_split={name: len(picked[name]) for name in senteval.SPLIT_NAMES},
        truncated=truncated,
        dim=dim,
        class_count=len(label_map),
        labels=label_names,
    )
