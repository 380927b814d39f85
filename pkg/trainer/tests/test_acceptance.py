"""End-to-end acceptance: overfit a toy corpus, serve it, and check the wire.

The two tests here exercise the full external contract of this package:
the corpus format read from disk, the training loop, the checkpoint, and
the HTTP protocol the evaluation harness drives. The upstream package is
imported only for its output parser and protocol checker, which together
define the interface this trainer must satisfy.
"""

import threading

import pytest
import requests
from tabprompt.backends import run_protocol_suite
from tabprompt.outparse import parse_generation

from tabtrainer.corpus import load_corpus
from tabtrainer.serving import load_checkpoint, make_server
from tabtrainer.training import TrainJobConfig, train

# The job memorizes a 50-record corpus from random initialization, so it
# uses a learning rate suited to from-scratch byte-level memorization
# rather than the config default, which is a fine-tuning rate. The width
# bump gives the byte-level model enough capacity to recall every row.
TOY_EPOCHS = 30
TOY_LR = 2e-3
TOY_WIDTH = 192
REQUIRED_RECALL = 0.90


@pytest.fixture(scope="module")
def toy_overfit(toy_corpus_path, tmp_path_factory):
    out = tmp_path_factory.mktemp("toy") / "ckpt"
    config = TrainJobConfig(
        corpus_path=str(toy_corpus_path),
        output_dir=str(out),
        epochs=TOY_EPOCHS,
        learning_rate=TOY_LR,
        batch_size=4,
        seed=0,
        n_embd=TOY_WIDTH,
        n_layer=2,
    )
    result = train(config)
    return result, out


@pytest.fixture(scope="module")
def served(toy_overfit):
    _, checkpoint = toy_overfit
    server = make_server(load_checkpoint(checkpoint), host="127.0.0.1", port=0)
    port = server.server_address[1]
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{port}"
    server.shutdown()
    server.server_close()


def test_toy_finetune_memorizes_corpus(toy_overfit, served, toy_corpus_path):
    result, _ = toy_overfit
    head = result.epoch_losses[:5]
    assert all(later < earlier for earlier, later in zip(head, head[1:])), (
        f"first five epoch losses must fall monotonically, got {head}"
    )

    records = load_corpus(toy_corpus_path)
    correct = 0
    for record in records:
        r = requests.post(
            served + "/generate",
            json={"prompt": record.prompt, "max_new_tokens": 64},
            timeout=120,
        )
        assert r.status_code == 200
        parsed = parse_generation(r.json()["text"], record.num_classes)
        if parsed.is_ok and parsed.predicted_class == record.true_class:
            correct += 1
    recall = correct / len(records)
    assert recall >= REQUIRED_RECALL, (
        f"served generations recalled {correct}/{len(records)} training rows"
    )


def test_protocol_conformance(served):
    results = run_protocol_suite(served, timeout=120)
    failures = [(name, msg) for name, ok, msg in results if not ok]
    assert len(results) == 5
    assert not failures, f"protocol checks failed: {failures}"
