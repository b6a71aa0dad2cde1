"""Shared fixtures: a tiny random local checkpoint and synthetic task files.

The checkpoint is a 3-block transformer with hidden size 16 and a 24-token
position table, saved to disk once per session; nothing is downloaded.
Sentences are built from an artificial vocabulary so every row tokenizes
without unknowns and every sentence is unique.
"""

import os

import pytest

os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")
os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_VERBOSITY", "error")

_WORDS = 200


@pytest.fixture(scope="session")
def model_dir(tmp_path_factory):
    import torch
    from transformers import BertConfig, BertModel, BertTokenizer

    root = tmp_path_factory.mktemp("tiny-model")
    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    vocab += [f"a{i}" for i in range(_WORDS)]
    (root / "vocab.txt").write_text("\n".join(vocab) + "\n", encoding="utf-8")
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=16,
        num_hidden_layers=3,
        num_attention_heads=2,
        intermediate_size=24,
        max_position_embeddings=24,
        pad_token_id=0,
    )
    torch.manual_seed(7)
    model = BertModel(config)
    model.save_pretrained(root)
    tok = BertTokenizer(str(root / "vocab.txt"), model_max_length=24)
    tok.save_pretrained(root)
    return str(root)


def _sentence(counter, n_words=3):
    digits = []
    value = counter
    for _ in range(n_words):
        digits.append(value % _WORDS)
        value //= _WORDS
    return " ".join(f"a{d}" for d in digits)


@pytest.fixture(scope="session")
def big_task_file(tmp_path_factory):
    """A task file large enough for 1200-per-class extraction (1205 rows/class/split)."""
    lines = []
    counter = 0
    for split in ("tr", "va", "te"):
        for label in ("NEG", "POS"):
            for _ in range(1205):
                lines.append(f"{split}\t{label}\t{_sentence(counter)}")
                counter += 1
    path = tmp_path_factory.mktemp("big-task") / "probe-task.tsv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)


@pytest.fixture()
def make_tsv(tmp_path):
    """Factory writing a split/label/sentence file with unique sentences."""

    def build(per_class, name="toy-task.tsv", labels=("NEG", "POS"),
              splits=("tr", "va", "te"), long_in_train=0):
        lines = []
        counter = 0
        for split in splits:
            for label in labels:
                for row in range(per_class):
                    if split == splits[0] and label == labels[0] and row < long_in_train:
                        # Thirty single-token words exceed the 24-slot position
                        # table once special tokens are added, forcing truncation.
                        text = " ".join(_sentence(counter * 30 + j + 100_000)
                                        for j in range(30))
                    else:
                        text = _sentence(counter)
                    lines.append(f"{split}\t{label}\t{text}")
                    counter += 1
        path = tmp_path / name
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return str(path)

    return build
