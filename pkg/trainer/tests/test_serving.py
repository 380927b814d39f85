"""Checkpoint loading and the HTTP generation endpoints."""

import threading
from pathlib import Path

import pytest
import requests

from tabtrainer.corpus import load_corpus
from tabtrainer.serving import CheckpointError, load_checkpoint, make_server
from tabtrainer.training import TrainJobConfig, train


@pytest.fixture(scope="module")
def tiny_checkpoint(toy_corpus_path, tmp_path_factory) -> Path:
    """A throwaway model: 12 records, 2 epochs, just enough to serve."""
    base = tmp_path_factory.mktemp("tiny")
    lines = toy_corpus_path.read_text(encoding="utf-8").splitlines()[:12]
    corpus = base / "subset.jsonl"
    corpus.write_text("\n".join(lines) + "\n", encoding="utf-8")
    out = base / "ckpt"
    train(
        TrainJobConfig(
            corpus_path=str(corpus),
            output_dir=str(out),
            epochs=2,
            learning_rate=2e-3,
            seed=0,
        )
    )
    return out


@pytest.fixture(scope="module")
def server_url(tiny_checkpoint):
    generator = load_checkpoint(tiny_checkpoint)
    server = make_server(generator, host="127.0.0.1", port=0)
    port = server.server_address[1]
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{port}"
    server.shutdown()
    server.server_close()


def test_load_checkpoint_rejects_missing_dir(tmp_path):
    with pytest.raises(CheckpointError, match="not found"):
        load_checkpoint(tmp_path / "nothing")


def test_load_checkpoint_rejects_empty_dir(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    with pytest.raises(CheckpointError, match="no model config"):
        load_checkpoint(empty)


def test_health(server_url):
    r = requests.get(server_url + "/health", timeout=30)
    assert r.status_code == 200
    doc = r.json()
    assert doc["status"] == "ok"
    assert isinstance(doc["model"], str)


def test_generate_shape_and_determinism(server_url, toy_corpus_path):
    prompt = load_corpus(toy_corpus_path)[0].prompt
    payload = {"prompt": prompt, "max_new_tokens": 32}
    first = requests.post(server_url + "/generate", json=payload, timeout=60)
    assert first.status_code == 200
    text = first.json()["text"]
    assert isinstance(text, str)
    again = requests.post(server_url + "/generate", json=payload, timeout=60)
    assert again.json()["text"] == text


def test_generate_honors_token_budget(server_url, toy_corpus_path):
    prompt = load_corpus(toy_corpus_path)[0].prompt
    for budget in (1, 4, 16):
        r = requests.post(
            server_url + "/generate",
            json={"prompt": prompt, "max_new_tokens": budget},
            timeout=60,
        )
        assert r.status_code == 200
        # each decoded character consumes at least one generated byte
        assert len(r.json()["text"]) <= budget


def test_generate_overlong_prompt_is_truncated_not_rejected(server_url):
    prompt = (
        "filler value is " + "7" * 900 + ".\n# You should return the "
        "probability of each class by: \nclasses\n# Answer: \n"
    )
    r = requests.post(
        server_url + "/generate",
        json={"prompt": prompt, "max_new_tokens": 16},
        timeout=60,
    )
    assert r.status_code == 200
    assert isinstance(r.json()["text"], str)


def test_batch_generate_alignment(server_url, toy_corpus_path):
    prompts = [r.prompt for r in load_corpus(toy_corpus_path)[:3]]
    r = requests.post(
        server_url + "/batch_generate",
        json={"prompts": prompts, "max_new_tokens": 16},
        timeout=120,
    )
    assert r.status_code == 200
    texts = r.json()["texts"]
    assert len(texts) == 3
    assert all(isinstance(t, str) for t in texts)
    single = requests.post(
        server_url + "/generate",
        json={"prompt": prompts[1], "max_new_tokens": 16},
        timeout=60,
    ).json()["text"]
    assert texts[1] == single


def test_batch_generate_empty_list(server_url):
    r = requests.post(
        server_url + "/batch_generate",
        json={"prompts": [], "max_new_tokens": 16},
        timeout=30,
    )
    assert r.status_code == 200
    assert r.json()["texts"] == []


def test_malformed_body_is_400(server_url):
    r = requests.post(
        server_url + "/generate",
        data=b"{not json",
        headers={"Content-Type": "application/json"},
        timeout=30,
    )
    assert r.status_code == 400
    assert "error" in r.json()


def test_wrong_types_are_400(server_url):
    cases = [
        ("/generate", {"prompt": 42}),
        ("/generate", {"prompt": "x", "max_new_tokens": "many"}),
        ("/generate", {"prompt": "x", "max_new_tokens": 0}),
        ("/batch_generate", {"prompts": "not a list"}),
        ("/batch_generate", {"prompts": ["ok", 3]}),
    ]
    for path, payload in cases:
        r = requests.post(server_url + path, json=payload, timeout=30)
        assert r.status_code == 400, f"{path} {payload}"
        assert "error" in r.json()


def test_unknown_path_is_404(server_url):
    assert requests.get(server_url + "/nope", timeout=30).status_code == 404
    assert requests.post(server_url + "/nope", json={}, timeout=30).status_code == 404
