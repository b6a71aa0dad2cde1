"""End-to-end extraction behavior against a tiny local checkpoint.

These tests exercise the extractor through its public job API and CLI.
They read the produced files back through the probing toolkit's loader,
which is the intended consumer of the format.
"""

import json
import logging

import numpy as np
import pytest

from extractor.cli import main, parse_layers
from extractor.errors import FormatError, LayerOutOfRange, ModelLoadError
from extractor.extract import ExtractionJob, extract, sanitize_tag
from probe_oracle.datamodel import EmbeddingDataset


def test_sanitize_tag_folds_into_name_grammar():
    assert sanitize_tag("bert_base_v1") == "bert-base-v1"
    assert sanitize_tag("tiny.model+fast") == "tiny.model+fast"
    assert sanitize_tag("--trimmed--") == "trimmed"
    assert sanitize_tag("9layers") == "x9layers"
    assert sanitize_tag("") == "x"
    assert sanitize_tag("über modell") == "ber-modell"


def test_job_validation_rejects_bad_requests(tmp_path):
    ok = dict(model="m", task_file="t.tsv", out_dir=str(tmp_path))
    with pytest.raises(LayerOutOfRange, match="1-based"):
        ExtractionJob(layers=(0, 1), **ok)
    with pytest.raises(FormatError, match="at least one layer"):
        ExtractionJob(layers=(), **ok)
    with pytest.raises(FormatError, match="duplicate layers"):
        ExtractionJob(layers=(2, 2), **ok)
    with pytest.raises(FormatError, match="samples_per_class"):
        ExtractionJob(layers=(1,), samples_per_class=0, **ok)
    with pytest.raises(FormatError, match="batch_size"):
        ExtractionJob(layers=(1,), batch_size=0, **ok)
    job = ExtractionJob(layers=(3, 1, 2), **ok)
    assert job.layers == (1, 2, 3)


def test_extraction_writes_one_valid_file_per_layer(model_dir, make_tsv, tmp_path):
    task = make_tsv(per_class=30)
    out = tmp_path / "emb"
    job = ExtractionJob(model=model_dir, task_file=task, layers=(1, 2, 3),
                        samples_per_class=20, seed=7, out_dir=str(out), batch_size=16)
    summary = extract(job)

    assert summary.n_sentences == 120
    assert summary.per_split == {"train": 40, "dev": 40, "test": 40}
    assert summary.dim == 16
    assert summary.class_count == 2
    assert summary.labels == ("NEG", "POS")
    assert [p.rsplit("/", 1)[-1] for p in summary.files] == [
        "toy-task_layer01.pemb", "toy-task_layer02.pemb", "toy-task_layer03.pemb",
    ]

    payloads = []
    for layer, path in zip((1, 2, 3), summary.files):
        ds = EmbeddingDataset.load(path)
        assert ds.dim == 16 and ds.class_count == 2
        for split in ("train", "dev", "test"):
            x, y = ds.split(split)
            assert x.shape == (40, 16) and x.dtype == np.float32
            assert np.isfinite(x).all()
            assert np.bincount(y, minlength=2).tolist() == [20, 20]
        assert ds.metadata["layer"] == layer
        assert ds.metadata["task"] == "toy-task"
        assert ds.metadata["hidden_size"] == 16
        assert ds.metadata["num_layers"] == 3
        assert ds.metadata["samples_per_class"] == 20
        assert ds.metadata["seed"] == 7
        assert ds.metadata["labels"] == ["NEG", "POS"]
        payloads.append(ds.split("train")[0])

    # different blocks must produce genuinely different representations
    assert not np.array_equal(payloads[0], payloads[1])
    assert not np.array_equal(payloads[1], payloads[2])


def test_layer_beyond_model_depth_is_rejected(model_dir, make_tsv, tmp_path):
    task = make_tsv(per_class=4)
    job = ExtractionJob(model=model_dir, task_file=task, layers=(4,),
                        samples_per_class=2, out_dir=str(tmp_path))
    with pytest.raises(LayerOutOfRange, match="model has 3 blocks, layer 4 requested"):
        extract(job)


def test_truncation_is_counted_and_logged(model_dir, make_tsv, tmp_path, caplog):
    task = make_tsv(per_class=6, long_in_train=2)
    job = ExtractionJob(model=model_dir, task_file=task, layers=(1,),
                        samples_per_class=6, out_dir=str(tmp_path / "e"))
    with caplog.at_level(logging.INFO, logger="extractor"):
        summary = extract(job)
    assert summary.truncated == 2
    assert "truncated 2 of 36 sentences to 24 tokens" in caplog.text
    ds = EmbeddingDataset.load(summary.files[0])
    assert ds.metadata["truncated"] == 2


def test_shortfall_surfaces_as_format_error_with_counts(model_dir, make_tsv, tmp_path):
    task = make_tsv(per_class=30)
    job = ExtractionJob(model=model_dir, task_file=task, layers=(1,),
                        samples_per_class=50, out_dir=str(tmp_path))
    with pytest.raises(FormatError, match="insufficient samples for 50 per class in split train"):
        extract(job)


def test_unloadable_model_raises_model_load_error(make_tsv, tmp_path):
    task = make_tsv(per_class=3)
    job = ExtractionJob(model=str(tmp_path / "no-such-checkpoint"), task_file=task,
                        layers=(1,), samples_per_class=2, out_dir=str(tmp_path))
    with pytest.raises(ModelLoadError, match="cannot load"):
        extract(job)


def test_batch_size_does_not_change_the_vectors(model_dir, make_tsv, tmp_path):
    task = make_tsv(per_class=10)
    vecs = []
    for bs in (32, 3):
        out = tmp_path / f"b{bs}"
        job = ExtractionJob(model=model_dir, task_file=task, layers=(2,),
                            samples_per_class=10, seed=1, out_dir=str(out), batch_size=bs)
        summary = extract(job)
        vecs.append(EmbeddingDataset.load(summary.files[0]).split("train")[0])
    np.testing.assert_allclose(vecs[0], vecs[1], rtol=1e-5, atol=1e-6)


def test_parse_layers_accepts_singles_ranges_and_lists():
    assert parse_layers("1-12") == tuple(range(1, 13))
    assert parse_layers("3") == (3,)
    assert parse_layers("1,4-6") == (1, 4, 5, 6)


def test_cli_happy_path_prints_summary_json(model_dir, make_tsv, tmp_path, capsys):
    task = make_tsv(per_class=5)
    out = tmp_path / "cli-out"
    code = main([
        "--model", model_dir, "--task-file", task, "--layers", "1-2",
        "--samples-per-class", "4", "--seed", "3", "--out", str(out),
    ])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["sentences"] == 24
    assert payload["classes"] == 2
    assert payload["truncated"] == 0
    assert len(payload["written"]) == 2
    for path in payload["written"]:
        EmbeddingDataset.load(path)  # must parse cleanly


@pytest.mark.parametrize(
    "layers, expected",
    [("0", 2), ("6-4", 1), ("one", 1), ("", 1), ("1,,2", 1)],
)
def test_cli_rejects_bad_layer_specs(model_dir, make_tsv, tmp_path, capsys, layers, expected):
    task = make_tsv(per_class=3)
    code = main(["--model", model_dir, "--task-file", task,
                 "--layers", layers, "--samples-per-class", "2", "--out", str(tmp_path)])
    capsys.readouterr()
    assert code == expected


def test_cli_maps_extraction_failures_to_exit_2(model_dir, tmp_path, capsys):
    code = main(["--model", model_dir, "--task-file", str(tmp_path / "missing.tsv"),
                 "--layers", "1", "--out", str(tmp_path)])
    err = capsys.readouterr().err
    assert code == 2
    assert "error:" in err


def test_cli_missing_required_argument_is_usage_error(capsys):
    code = main(["--model", "m"])
    err = capsys.readouterr().err
    assert code == 1
    assert "usage error" in err
