"""Fine-tune a byte-level causal LM on a prompt/target corpus.

The model reads the prompt and is trained to emit the reference completion;
loss is only taken on completion tokens. Checkpoints are plain
``save_pretrained`` directories plus a ``job.json`` describing the run.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import torch
from transformers import GPT2Config, GPT2LMHeadModel

from .corpus import TrainRecord, load_corpus
from .tokenizer import EOS_ID, PAD_ID, VOCAB_SIZE, ByteTokenizer

logger = logging.getLogger(__name__)

# Prompts end with a fixed instruction block introduced by this marker.
# When a prompt must be shortened to fit the context, only the feature
# text ahead of the marker is cut; the instruction block survives intact.
INSTRUCTION_MARKER = "\n# You should return"


class TrainingError(RuntimeError):
    pass


@dataclass
class TrainJobConfig:
    corpus_path: str
    output_dir: str
    epochs: int = 3
    learning_rate: float = 5e-5
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    weight_decay: float = 0.0
    seed: int = 0
    batch_size: int = 4
    context_limit: int = 512
    n_embd: int = 128
    n_layer: int = 2
    n_head: int = 4

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.context_limit < 8:
            raise ValueError("context_limit too small")


def truncate_prompt(prompt_ids: list[int], budget: int, tokenizer: ByteTokenizer, prompt: str) -> list[int]:
    """Shorten an encoded prompt to ``budget`` tokens from the left.

    The instruction block at the tail of the prompt is preserved; only the
    object description ahead of it is trimmed. Prompts without the marker
    fall back to plain left truncation.
    """
    if len(prompt_ids) <= budget:
        return prompt_ids
    cut = prompt.rfind(INSTRUCTION_MARKER)
    if cut < 0:
        return prompt_ids[-budget:]
    suffix_ids = tokenizer.encode(prompt[cut:])
    head_room = budget - len(suffix_ids)
    if head_room < 0:
        raise TrainingError(
            f"instruction block alone needs {len(suffix_ids)} tokens, budget is {budget}"
        )
    head_ids = tokenizer.encode(prompt[:cut])
    return head_ids[len(head_ids) - head_room :] + suffix_ids


def encode_example(
    record: TrainRecord, tokenizer: ByteTokenizer, context_limit: int
) -> tuple[list[int], int]:
    """Encode one record as ``prompt + reference + EOS`` token ids.

    Returns the ids and the index where the completion begins (loss is
    masked ahead of that index). Raises TrainingError when the completion
    plus instruction block cannot fit the context at all.
    """
    completion_ids = tokenizer.encode(record.reference) + [EOS_ID]
    budget = context_limit - len(completion_ids)
    if budget <= 0:
        raise TrainingError(
            f"record {record.dataset_id}/{record.row_id}: completion of "
            f"{len(completion_ids)} tokens leaves no room in a context of {context_limit}"
        )
    prompt_ids = truncate_prompt(tokenizer.encode(record.prompt), budget, tokenizer, record.prompt)
    return prompt_ids + completion_ids, len(prompt_ids)


def _make_batch(
    examples: list[tuple[list[int], int]],
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    maxlen = max(len(ids) for ids, _ in examples)
    input_ids = torch.full((len(examples), maxlen), PAD_ID, dtype=torch.long)
    labels = torch.full((len(examples), maxlen), -100, dtype=torch.long)
    attention = torch.zeros((len(examples), maxlen), dtype=torch.long)
    for i, (ids, split) in enumerate(examples):
        n = len(ids)
        t = torch.tensor(ids, dtype=torch.long)
        input_ids[i, :n] = t
        labels[i, split:n] = t[split:]
        attention[i, :n] = 1
    return input_ids, labels, attention


def build_model(config: TrainJobConfig) -> GPT2LMHeadModel:
    model_config = GPT2Config(
        vocab_size=VOCAB_SIZE,
        n_positions=config.context_limit,
        n_embd=config.n_embd,
        n_layer=config.n_layer,
        n_head=config.n_head,
        bos_token_id=EOS_ID,
        eos_token_id=EOS_ID,
        pad_token_id=PAD_ID,
    )
    return GPT2LMHeadModel(model_config)


@dataclass
class TrainResult:
    output_dir: str
    step_losses: list[float] = field(default_factory=list)
    epoch_losses: list[float] = field(default_factory=list)


def train(config: TrainJobConfig) -> TrainResult:
    """Run the fine-tuning job described by ``config`` and write a checkpoint."""
    records = load_corpus(config.corpus_path)
    tokenizer = ByteTokenizer()
    examples = [encode_example(r, tokenizer, config.context_limit) for r in records]

    torch.manual_seed(config.seed)
    model = build_model(config)
    model.train()
    optimizer = torch.optim.AdamW(
        model.parameters(),
        lr=config.learning_rate,
        betas=(config.beta1, config.beta2),
        eps=config.epsilon,
        weight_decay=config.weight_decay,
    )

    shuffler = torch.Generator().manual_seed(config.seed)
    result = TrainResult(output_dir=config.output_dir)
    for epoch in range(config.epochs):
        order = torch.randperm(len(examples), generator=shuffler).tolist()
        epoch_losses: list[float] = []
        for start in range(0, len(order), config.batch_size):
            batch = [examples[i] for i in order[start : start + config.batch_size]]
            input_ids, labels, attention = _make_batch(batch)
            out = model(input_ids=input_ids, labels=labels, attention_mask=attention)
            loss = out.loss
            if not torch.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch + 1}, step {len(result.step_losses) + 1}"
                )
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            value = float(loss.detach())
            result.step_losses.append(value)
            epoch_losses.append(value)
        mean = sum(epoch_losses) / len(epoch_losses)
        result.epoch_losses.append(mean)
        logger.info("epoch %d/%d mean loss %.4f", epoch + 1, config.epochs, mean)

    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out_dir)
    job = {
        "config": asdict(config),
        "tokenizer": "byte-258",
        "step_losses": result.step_losses,
        "epoch_losses": result.epoch_losses,
        "num_records": len(records),
    }
    (out_dir / "job.json").write_text(json.dumps(job, indent=2) + "\n", encoding="utf-8")
    return result
