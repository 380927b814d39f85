"""Command line entry points for training and serving."""

from __future__ import annotations

import logging

import click

from .serving import serve as serve_checkpoint
from .training import TrainJobConfig, train


@click.group()
def main() -> None:
    """Train byte-level generators on tabular prompt corpora and serve them."""
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")


@main.command("train")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--output-dir", required=True, type=click.Path(file_okay=False))
@click.option("--epochs", default=3, show_default=True, type=int)
@click.option("--lr", "learning_rate", default=5e-5, show_default=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--batch-size", default=4, show_default=True, type=int)
def train_cmd(corpus_path: str, output_dir: str, epochs: int, learning_rate: float, seed: int, batch_size: int) -> None:
    """Fine-tune a model on a corpus JSONL file."""
    config = TrainJobConfig(
        corpus_path=corpus_path,
        output_dir=output_dir,
        epochs=epochs,
        learning_rate=learning_rate,
        seed=seed,
        batch_size=batch_size,
    )
    result = train(config)
    click.echo(f"checkpoint written to {result.output_dir}")
    click.echo(f"final epoch loss {result.epoch_losses[-1]:.4f}")


@main.command("serve")
@click.option("--checkpoint", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8600, show_default=True, type=int)
def serve(checkpoint: str, host: str, port: int) -> None:
    """Serve a checkpoint over HTTP."""
    serve_checkpoint(checkpoint, host=host, port=port)
