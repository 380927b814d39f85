"""Command-line interface: exit codes, reports, corpus builds, config."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from tabprompt.cli import main
from tabprompt.synth import make_classification_dataset


@pytest.fixture(scope="module")
def runner():
    return CliRunner()


def _write_registry(root: Path, n=3, rows=30, seed=0):
    """Synthetic manifest with n CSV datasets under root."""
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    for k in range(n):
        d = make_classification_dataset(f"ds{k}", n_rows=rows, n_classes=2 + k % 2, seed=seed + k)
        path = root / f"ds{k}.csv"
        with path.open("w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(d.column_names)
            for row in d.rows:
                w.writerow(["" if c is None else c for c in row])
        entries.append({"id": d.id, "path": path.name, "target_column": d.target_column})
    manifest = root / "manifest.json"
    manifest.write_text(json.dumps({"datasets": entries}, indent=2))
    return manifest


def test_ingest_valid_manifest(runner, tmp_path):
    manifest = _write_registry(tmp_path / "data", n=3)
    out = runner.invoke(main, ["ingest", "--manifest", str(manifest)])
    assert out.exit_code == 0, out.output
    for k in range(3):
        assert f"ds{k}" in out.output
    assert "30" in out.output  # row count echoed


def test_ingest_fixture_manifest(runner, fixtures_dir):
    out = runner.invoke(main, ["ingest", "--manifest", str(fixtures_dir / "manifest.json")])
    assert out.exit_code == 0, out.output
    assert "netflix" in out.output and "amazon" in out.output and "diabetes" in out.output
    assert "24" in out.output


def test_ingest_missing_file_exits_nonzero(runner, tmp_path):
    doc = {"datasets": [{"id": "ghost", "path": "ghost.csv"}]}
    manifest = tmp_path / "m.json"
    manifest.write_text(json.dumps(doc))
    out = runner.invoke(main, ["ingest", "--manifest", str(manifest)])
    assert out.exit_code == 1
    assert "ghost" in out.output


def test_missing_manifest_flag_errors(runner, tmp_path):
    out = runner.invoke(main, ["ingest", "--manifest", str(tmp_path / "nope.json")])
    assert out.exit_code == 1


def test_reformat_uses_fallback_without_endpoint(runner, tmp_path):
    manifest = _write_registry(tmp_path / "data", n=2)
    out = runner.invoke(
        main,
        ["reformat", "--manifest", str(manifest), "--cache-dir", str(tmp_path / "cache")],
    )
    assert out.exit_code == 0, out.output
    assert "fallback" in out.output
    assert (tmp_path / "cache" / "ds0.json").exists()


def test_evaluate_oracle_all_ones(runner, tmp_path):
    manifest = _write_registry(tmp_path / "data", n=2)
    out = runner.invoke(
        main,
        [
            "evaluate",
            "--manifest", str(manifest),
            "--cache-dir", str(tmp_path / "cache"),
            "--output-dir", str(tmp_path / "out"),
            "--backend", "oracle",
        ],
    )
    assert out.exit_code == 0, out.output
    doc = json.loads((tmp_path / "out" / "report.json").read_text())
    accs = [r["accuracy"] for r in doc["results"]]
    assert accs and all(a == 1.0 for a in accs)


def test_evaluate_remote_health_failure_is_config_error(runner, tmp_path):
    manifest = _write_registry(tmp_path / "data", n=1)
    out = runner.invoke(
        main,
        [
            "evaluate",
            "--manifest", str(manifest),
            "--cache-dir", str(tmp_path / "cache"),
            "--output-dir", str(tmp_path / "out"),
            "--backend", "remote",
            "--remote-url", "http://127.0.0.1:9",
        ],
    )
    assert out.exit_code == 1
    assert "health" in out.output.lower()


def test_fewshot_ratio_subset_respected(runner, tmp_path):
    manifest = _write_registry(tmp_path / "data", n=2, rows=40)
    out = runner.invoke(
        main,
        [
            "fewshot",
            "--manifest", str(manifest),
            "--cache-dir", str(tmp_path / "cache"),
            "--output-dir", str(tmp_path / "out"),
            "--ratios", "0.1,0.5,0.9",
            "--models", "proxy,mlp",
            "--rounds", "5",
        ],
    )
    assert out.exit_code == 0, out.output
    doc = json.loads((tmp_path / "out" / "report.json").read_text())
    assert sorted({f"{r['ratio']:.2f}" for r in doc["results"]}) == ["0.10", "0.50", "0.90"]
    assert sorted(doc["ranks"]) == ["0.10", "0.50", "0.90"]


def test_build_corpus_warm_cache_rerun_same_hash(runner, tmp_path):
    manifest = _write_registry(tmp_path / "data", n=2)
    args = [
        "build-corpus",
        "--manifest", str(manifest),
        "--cache-dir", str(tmp_path / "cache"),
        "--output-dir", str(tmp_path / "out"),
        "--variant", "light",
        "--mode", "onehot",
    ]
    first = runner.invoke(main, args)
    assert first.exit_code == 0, first.output
    corpus = tmp_path / "out" / "corpus-light-onehot.jsonl"
    manifest_doc = json.loads((corpus.parent / (corpus.name + ".manifest.json")).read_text())
    second = runner.invoke(main, args)
    assert second.exit_code == 0
    manifest_doc2 = json.loads((corpus.parent / (corpus.name + ".manifest.json")).read_text())
    assert manifest_doc["content_hash"] == manifest_doc2["content_hash"]


def test_build_corpus_light_has_no_description_lines(runner, tmp_path):
    manifest = _write_registry(tmp_path / "data", n=2)
    out = runner.invoke(
        main,
        [
            "build-corpus",
            "--manifest", str(manifest),
            "--cache-dir", str(tmp_path / "cache"),
            "--output-dir", str(tmp_path / "out"),
            "--variant", "light",
            "--mode", "augmented",
            "--rounds", "5",
        ],
    )
    assert out.exit_code == 0, out.output
    text = (tmp_path / "out" / "corpus-light-augmented.jsonl").read_text()
    assert "# Dataset description:" not in text
    assert "# Object description:" in text


def test_config_file_supplies_defaults(runner, tmp_path):
    manifest = _write_registry(tmp_path / "data", n=1)
    cfg = tmp_path / "run.toml"
    cfg.write_text(
        f'manifest = "{manifest}"\n'
        f'cache_dir = "{tmp_path / "cache"}"\n'
        f'output_dir = "{tmp_path / "out"}"\n'
        "[seeds]\n"
        "split = 3\n"
    )
    out = runner.invoke(main, ["--config", str(cfg), "ingest"])
    assert out.exit_code == 0, out.output
    assert "ds0" in out.output


def test_config_unknown_key_rejected(runner, tmp_path):
    cfg = tmp_path / "bad.toml"
    cfg.write_text('manifest = "x.json"\nmystery_knob = 3\n')
    out = runner.invoke(main, ["--config", str(cfg), "ingest"])
    assert out.exit_code == 1
    assert "mystery_knob" in out.output
