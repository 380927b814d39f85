"""Training configuration, example encoding, and the fine-tuning loop."""

import json
from pathlib import Path

import pytest

from tabtrainer.corpus import TrainRecord, load_corpus
from tabtrainer.tokenizer import EOS_ID, ByteTokenizer
from tabtrainer.training import (
    INSTRUCTION_MARKER,
    TrainJobConfig,
    TrainingError,
    encode_example,
    train,
    truncate_prompt,
)


def _record(prompt: str, reference: str = "class 0: 1.0; class 1: 0.0.") -> TrainRecord:
    return TrainRecord(
        prompt=prompt,
        reference=reference,
        dataset_id="d",
        row_id=0,
        num_classes=2,
        true_class=0,
        variant="light",
    )


def _subset_corpus(source: Path, tmp_path: Path, n: int) -> Path:
    lines = source.read_text(encoding="utf-8").splitlines()[:n]
    path = tmp_path / f"subset{n}.jsonl"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


class TestTrainJobConfig:
    def test_optimizer_defaults(self, tmp_path):
        config = TrainJobConfig(corpus_path="c.jsonl", output_dir=str(tmp_path))
        assert config.epochs == 3
        assert config.learning_rate == 5e-5
        assert config.beta1 == 0.9
        assert config.beta2 == 0.999
        assert config.epsilon == 1e-8
        assert config.weight_decay == 0.0
        assert config.seed == 0

    def test_invariants(self, tmp_path):
        with pytest.raises(ValueError, match="epochs"):
            TrainJobConfig(corpus_path="c", output_dir=str(tmp_path), epochs=0)
        with pytest.raises(ValueError, match="learning_rate"):
            TrainJobConfig(corpus_path="c", output_dir=str(tmp_path), learning_rate=0.0)
        with pytest.raises(ValueError, match="batch_size"):
            TrainJobConfig(corpus_path="c", output_dir=str(tmp_path), batch_size=0)


class TestEncoding:
    def test_short_prompt_untouched(self):
        tok = ByteTokenizer()
        record = _record("x is 1.\n# You should return p.\n# Answer: \n")
        ids, split = encode_example(record, tok, context_limit=512)
        assert split == len(record.prompt.encode("utf-8"))
        assert ids[:split] == tok.encode(record.prompt)
        assert ids[split:] == tok.encode(record.reference) + [EOS_ID]

    def test_truncation_keeps_instruction_suffix(self):
        tok = ByteTokenizer()
        head = "feature is " + "9" * 400 + "."
        suffix = "\n# You should return the probability of each class by: \nclasses\n# Answer: \n"
        record = _record(head + suffix)
        ids, split = encode_example(record, tok, context_limit=160)
        completion = tok.encode(record.reference) + [EOS_ID]
        assert len(ids) <= 160
        assert split == 160 - len(completion)
        decoded_prompt = tok.decode(ids[:split])
        assert decoded_prompt.endswith(suffix)
        assert len(decoded_prompt.encode("utf-8")) < len(record.prompt.encode("utf-8"))

    def test_truncation_without_marker_cuts_left(self):
        tok = ByteTokenizer()
        prompt = "abcdefghij" * 20
        ids = truncate_prompt(tok.encode(prompt), 50, tok, prompt)
        assert len(ids) == 50
        assert tok.decode(ids) == prompt[-50:]

    def test_completion_too_large_for_context(self):
        tok = ByteTokenizer()
        record = _record("x is 1.\n# Answer: \n", reference="c" * 300)
        with pytest.raises(TrainingError, match="no room"):
            encode_example(record, tok, context_limit=64)

    def test_instruction_block_alone_over_budget(self):
        tok = ByteTokenizer()
        suffix = "\n# You should return " + "w" * 200 + "\n# Answer: \n"
        record = _record("head text " * 30 + suffix)
        with pytest.raises(TrainingError, match="instruction block"):
            encode_example(record, tok, context_limit=128)

    def test_fixture_prompts_all_fit_untruncated(self, toy_corpus_path):
        tok = ByteTokenizer()
        for record in load_corpus(toy_corpus_path):
            ids, split = encode_example(record, tok, context_limit=512)
            assert len(ids) <= 512
            assert tok.decode(ids[:split]) == record.prompt


class TestTrainLoop:
    def test_loss_decreases_at_default_rate(self, wide_corpus_path, tmp_path):
        out = tmp_path / "ckpt"
        config = TrainJobConfig(corpus_path=str(wide_corpus_path), output_dir=str(out))
        result = train(config)
        assert len(result.epoch_losses) == 3
        assert result.epoch_losses[-1] < result.epoch_losses[0]
        assert all(
            later < earlier
            for earlier, later in zip(result.epoch_losses, result.epoch_losses[1:])
        )
        # checkpoint layout: weights plus a job description
        assert (out / "config.json").exists()
        assert (out / "model.safetensors").exists()
        job = json.loads((out / "job.json").read_text(encoding="utf-8"))
        assert job["tokenizer"] == "byte-258"
        assert job["config"]["learning_rate"] == 5e-5
        assert job["config"]["epochs"] == 3
        assert job["num_records"] == 200
        assert job["epoch_losses"] == result.epoch_losses
        assert len(job["step_losses"]) == 3 * ((200 + 3) // 4)

    def test_fixed_seed_runs_are_identical(self, toy_corpus_path, tmp_path):
        corpus = _subset_corpus(toy_corpus_path, tmp_path, 12)
        curves = []
        for run in range(2):
            config = TrainJobConfig(
                corpus_path=str(corpus),
                output_dir=str(tmp_path / f"run{run}"),
                epochs=2,
                seed=7,
            )
            curves.append(train(config).step_losses)
        assert len(curves[0]) == len(curves[1]) > 0
        assert all(abs(a - b) <= 1e-6 for a, b in zip(curves[0], curves[1]))

    def test_non_finite_loss_raises(self, toy_corpus_path, tmp_path):
        corpus = _subset_corpus(toy_corpus_path, tmp_path, 12)
        config = TrainJobConfig(
            corpus_path=str(corpus),
            output_dir=str(tmp_path / "blowup"),
            learning_rate=1e8,
        )
        with pytest.raises(TrainingError, match="non-finite loss"):
            train(config)
        assert not (tmp_path / "blowup" / "config.json").exists()

    def test_bad_corpus_fails_before_training(self, tmp_path):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("", encoding="utf-8")
        from tabtrainer.corpus import CorpusError

        with pytest.raises(CorpusError):
            train(TrainJobConfig(corpus_path=str(empty), output_dir=str(tmp_path / "o")))
