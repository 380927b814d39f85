"""Command-line pipeline: ingest, reformat, build-corpus, evaluate, fewshot.

One optional TOML config file supplies defaults; flags override it. Exit
codes: 0 success, 1 configuration error, 2 runtime failure. The chat-service
credential is only ever read from the environment, never from a flag.
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import click

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .backends import RemoteBackend, RemoteConfig
from .evalharness import (
    MODEL_MLP,
    MODEL_ORACLE,
    MODEL_PROXY,
    MODEL_REMOTE,
    SWEEP_RATIOS,
    RegistryEntry,
    SweepConfig,
    emit_report,
    fewshot_sweep,
)
from .ingest import (
    IngestError,
    SplitSpec,
    apply_cutoff,
    detect_target_kind,
    load_from_manifest,
    load_manifest,
    split,
)
from .metadata import (
    ChatClientConfig,
    HttpChatClient,
    MetadataCache,
    reformat_all,
)
from .promptgen import (
    MODE_AUGMENTED,
    MODE_ONEHOT,
    VARIANT_HEAVY,
    VARIANT_LIGHT,
    PreparedDataset,
    emit_corpus,
)

DEFAULT_CUTOFF = 7500
DEFAULT_TRAIN_RATIO = 0.9


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    manifest: Optional[str] = None
    cache_dir: str = ".tabprompt-cache"
    output_dir: str = "out"
    variant: str = VARIANT_HEAVY
    mode: str = MODE_AUGMENTED
    backend: str = MODEL_PROXY
    remote_url: Optional[str] = None
    endpoint: Optional[str] = None  # chat-completion service
    chat_model: str = "gpt-3.5-turbo"
    ratios: tuple[float, ...] = SWEEP_RATIOS
    max_rows: int = DEFAULT_CUTOFF
    train_ratio: float = DEFAULT_TRAIN_RATIO
    fewshot_max_rows: Optional[int] = None
    rounds: int = 100
    split_seed: int = 0
    cutoff_seed: int = 0
    train_seed: int = 0
    parallelism: int = 0  # 0 -> logical core count

    def effective_parallelism(self) -> int:
        return self.parallelism if self.parallelism > 0 else os.cpu_count() or 1


def load_config(path: Optional[str]) -> RunConfig:
    cfg = RunConfig()
    if path is None:
        return cfg
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        doc = tomllib.loads(p.read_text(encoding="utf-8"))
    except (OSError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"cannot read config {p}: {e}") from e
    seeds = doc.pop("seeds", {})
    known = set(RunConfig.__dataclass_fields__)
    for key, value in doc.items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        if key == "ratios":
            value = tuple(float(v) for v in value)
        setattr(cfg, key, value)
    for name, attr in (("split", "split_seed"), ("cutoff", "cutoff_seed"), ("training", "train_seed")):
        if name in seeds:
            setattr(cfg, attr, int(seeds[name]))
    return cfg


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _validated_manifest(cfg: RunConfig):
    if not cfg.manifest:
        raise ConfigError("no manifest configured (use --manifest or the config file)")
    path = Path(cfg.manifest)
    if not path.exists():
        raise ConfigError(f"manifest not found: {path}")
    entries = load_manifest(path)
    for e in entries:
        if not Path(e.path).exists():
            raise ConfigError(f"dataset file for {e.id!r} not found: {e.path}")
        if e.metadata_path and not Path(e.metadata_path).exists():
            raise ConfigError(f"metadata file for {e.id!r} not found: {e.metadata_path}")
    return entries


def _chat_client(cfg: RunConfig) -> Optional[HttpChatClient]:
    if not cfg.endpoint:
        return None
    return HttpChatClient(ChatClientConfig(endpoint=cfg.endpoint, model=cfg.chat_model))


def _load_registry(cfg: RunConfig) -> list[RegistryEntry]:
    entries = _validated_manifest(cfg)
    cache = MetadataCache(cfg.cache_dir)
    client = _chat_client(cfg)
    registry = []
    datasets = []
    for e in entries:
        d = load_from_manifest(e)
        d = apply_cutoff(d, cfg.max_rows, seed=cfg.cutoff_seed)
        datasets.append(d)
    metas = reformat_all(
        datasets, client=client, cache=cache, parallelism=cfg.effective_parallelism()
    )
    for d in datasets:
        meta = metas[d.id]
        if d.target_column is None:
            d.target_column = meta.target
        registry.append(RegistryEntry(dataset=d, meta=meta))
    return registry


def _run(ctx_cfg: RunConfig, body):
    try:
        body(ctx_cfg)
    except ConfigError as e:
        _fail(1, str(e))
    except Exception as e:
        _fail(2, str(e))


@click.group()
@click.option("--config", "config_path", type=str, default=None, help="TOML config file.")
@click.pass_context
def main(ctx, config_path):
    """Build instruction-tuning corpora from tabular data and evaluate
    generative predictors against them."""
    try:
        ctx.obj = load_config(config_path)
    except ConfigError as e:
        _fail(1, str(e))


def _common_options(fn):
    fn = click.option("--manifest", type=str, default=None, help="Dataset manifest JSON.")(fn)
    fn = click.option("--cache-dir", type=str, default=None, help="Metadata cache directory.")(fn)
    fn = click.option("--output-dir", type=str, default=None, help="Output directory.")(fn)
    fn = click.option("--split-seed", type=int, default=None)(fn)
    fn = click.option("--cutoff-seed", type=int, default=None)(fn)
    fn = click.option("--train-seed", type=int, default=None)(fn)
    fn = click.option("--max-rows", type=int, default=None, help="Row cutoff per dataset.")(fn)
    return fn


def _apply_overrides(cfg: RunConfig, **kwargs) -> RunConfig:
    updates = {k: v for k, v in kwargs.items() if v is not None}
    return replace(cfg, **updates)


@main.command("ingest")
@_common_options
@click.pass_obj
def cmd_ingest(cfg: RunConfig, **kwargs):
    """Validate the manifest and summarize every dataset."""
    cfg = _apply_overrides(cfg, **kwargs)

    def body(cfg: RunConfig):
        entries = _validated_manifest(cfg)
        click.echo(f"{'id':<32} {'rows':>6} {'cols':>5} target kind")
        for e in entries:
            d = load_from_manifest(e)
            d = apply_cutoff(d, cfg.max_rows, seed=cfg.cutoff_seed)
            kind = "unset"
            if d.target_column is not None:
                kind = detect_target_kind(d).variant
            click.echo(
                f"{d.id:<32} {len(d.rows):>6} {len(d.columns):>5} "
                f"{d.target_column or '-'} ({kind})"
            )

    _run(cfg, body)


@main.command("reformat")
@_common_options
@click.option("--endpoint", type=str, default=None, help="Chat-completion endpoint URL.")
@click.option("--chat-model", type=str, default=None)
@click.pass_obj
def cmd_reformat(cfg: RunConfig, **kwargs):
    """Reformat metadata for every dataset, filling the cache."""
    cfg = _apply_overrides(cfg, **kwargs)

    def body(cfg: RunConfig):
        registry = _load_registry(cfg)
        for entry in registry:
            click.echo(f"{entry.dataset.id}: target={entry.meta.target} ({entry.meta.source})")

    _run(cfg, body)


@main.command("build-corpus")
@_common_options
@click.option("--variant", type=click.Choice([VARIANT_HEAVY, VARIANT_LIGHT]), default=None)
@click.option("--mode", type=click.Choice([MODE_AUGMENTED, MODE_ONEHOT]), default=None)
@click.option("--train-ratio", type=float, default=None)
@click.option("--rounds", type=int, default=None, help="Boosting rounds for augmentation.")
@click.option("--endpoint", type=str, default=None, help="Chat-completion endpoint URL.")
@click.pass_obj
def cmd_build_corpus(cfg: RunConfig, **kwargs):
    """Build the instruction-tuning corpus for the configured registry."""
    cfg = _apply_overrides(cfg, **kwargs)

    def body(cfg: RunConfig):
        if not 0.0 < cfg.train_ratio < 1.0:
            raise ConfigError(f"train_ratio must be in (0,1), got {cfg.train_ratio}")
        registry = _load_registry(cfg)
        from .augmentor import fit_for_dataset, space_for_dataset

        prepared = []
        for entry in registry:
            train, _ = split(entry.dataset, SplitSpec(cfg.train_ratio, seed=cfg.split_seed))
            space = space_for_dataset(train)
            model = None
            if cfg.mode == MODE_AUGMENTED:
                model = fit_for_dataset(train, space, rounds=cfg.rounds)
            prepared.append(
                PreparedDataset(dataset=train, meta=entry.meta, space=space, model=model)
            )
        out = Path(cfg.output_dir) / f"corpus-{cfg.variant}-{cfg.mode}.jsonl"
        manifest = emit_corpus(
            prepared,
            cfg.variant,
            cfg.mode,
            out,
            seeds={"split": cfg.split_seed, "cutoff": cfg.cutoff_seed},
        )
        click.echo(f"wrote {manifest.record_count} records to {out}")
        click.echo(f"content hash: {manifest.content_hash}")

    _run(cfg, body)


@main.command("evaluate")
@_common_options
@click.option("--backend", type=click.Choice([MODEL_ORACLE, MODEL_PROXY, MODEL_REMOTE]), default=None)
@click.option("--remote-url", type=str, default=None)
@click.option("--variant", type=click.Choice([VARIANT_HEAVY, VARIANT_LIGHT]), default=None)
@click.option("--train-ratio", type=float, default=None)
@click.option("--rounds", type=int, default=None)
@click.pass_obj
def cmd_evaluate(cfg: RunConfig, **kwargs):
    """Evaluate one backend on every dataset's held-out split."""
    cfg = _apply_overrides(cfg, **kwargs)

    def body(cfg: RunConfig):
        if not 0.0 < cfg.train_ratio < 1.0:
            raise ConfigError(f"train_ratio must be in (0,1), got {cfg.train_ratio}")
        remote = None
        if cfg.backend == MODEL_REMOTE:
            if not cfg.remote_url:
                raise ConfigError("remote backend needs --remote-url")
            remote = RemoteConfig(base_url=cfg.remote_url)
            if not RemoteBackend(remote).health():
                raise ConfigError(f"remote backend health check failed: {cfg.remote_url}")
        registry = _load_registry(cfg)
        sweep_cfg = SweepConfig(
            ratios=(cfg.train_ratio,),
            model_ids=(cfg.backend,),
            split_seed=cfg.split_seed,
            train_seed=cfg.train_seed,
            variant=cfg.variant,
            rounds=cfg.rounds,
            parallelism=cfg.effective_parallelism(),
            remote=remote,
        )
        report = fewshot_sweep(registry, sweep_cfg)
        json_path, csv_path = emit_report(report, cfg.output_dir)
        for r in report.results:
            click.echo(f"{r.dataset_id:<32} {r.model_id:<8} accuracy={r.accuracy:.4f}")
        for w in report.warnings:
            click.echo(f"warning: {w}", err=True)
        click.echo(f"report: {json_path} {csv_path}")

    _run(cfg, body)


@main.command("fewshot")
@_common_options
@click.option("--ratios", type=str, default=None, help="Comma-separated ratios in (0,1).")
@click.option(
    "--models", type=str, default=None, help="Comma-separated subset of oracle,proxy,ensemble,mlp,remote."
)
@click.option("--remote-url", type=str, default=None)
@click.option("--variant", type=click.Choice([VARIANT_HEAVY, VARIANT_LIGHT]), default=None)
@click.option("--fewshot-max-rows", type=int, default=None, help="Few-shot dataset size filter.")
@click.option("--rounds", type=int, default=None)
@click.pass_obj
def cmd_fewshot(cfg: RunConfig, ratios, models, **kwargs):
    """Sweep train-ratio ladders across models and rank the results."""
    cfg = _apply_overrides(cfg, **kwargs)

    def body(cfg: RunConfig):
        ratio_list = cfg.ratios
        if ratios is not None:
            try:
                ratio_list = tuple(float(v) for v in ratios.split(","))
            except ValueError:
                raise ConfigError(f"bad --ratios value: {ratios!r}") from None
        for r in ratio_list:
            if not 0.0 < r < 1.0:
                raise ConfigError(f"ratio {r} outside (0,1)")
        model_ids = (MODEL_PROXY, MODEL_MLP)
        if models is not None:
            model_ids = tuple(m.strip() for m in models.split(",") if m.strip())
        remote = None
        if MODEL_REMOTE in model_ids:
            if not cfg.remote_url:
                raise ConfigError("remote model needs --remote-url")
            remote = RemoteConfig(base_url=cfg.remote_url)
            if not RemoteBackend(remote).health():
                raise ConfigError(f"remote backend health check failed: {cfg.remote_url}")
        registry = _load_registry(cfg)
        if cfg.fewshot_max_rows is not None:
            excluded = [
                e.dataset.id for e in registry if len(e.dataset.rows) > cfg.fewshot_max_rows
            ]
            for ds in excluded:
                click.echo(
                    f"warning: {ds} exceeds {cfg.fewshot_max_rows} rows, excluded", err=True
                )
            registry = [
                e for e in registry if len(e.dataset.rows) <= cfg.fewshot_max_rows
            ]
            if not registry:
                raise ConfigError("no datasets left after the few-shot size filter")
        sweep_cfg = SweepConfig(
            ratios=ratio_list,
            model_ids=model_ids,
            split_seed=cfg.split_seed,
            train_seed=cfg.train_seed,
            variant=cfg.variant,
            max_rows=cfg.fewshot_max_rows,
            rounds=cfg.rounds,
            parallelism=cfg.effective_parallelism(),
            remote=remote,
        )
        report = fewshot_sweep(registry, sweep_cfg)
        json_path, csv_path = emit_report(report, cfg.output_dir)
        for key in sorted(report.ranks):
            table = report.ranks[key]
            summary = ", ".join(
                f"{m}: mean rank {table.aggregates[m].mean:.2f}" for m in table.model_ids
            )
            click.echo(f"ratio {key}: {summary}")
        for w in report.warnings:
            click.echo(f"warning: {w}", err=True)
        click.echo(f"report: {json_path} {csv_path}")

    _run(cfg, body)


if __name__ == "__main__":
    main()
