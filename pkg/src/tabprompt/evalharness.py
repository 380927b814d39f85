"""Evaluation: per-dataset accuracy, cross-model ranks, few-shot sweeps.

Every generative prediction flows prompt -> backend -> outparse -> class
index; parses that fail or come back truncated score as incorrect, keeping
denominators comparable across models. Ranks are 1-based with average ties
(lower is better) so the per-dataset rank sum is always M(M+1)/2.
"""

from __future__ import annotations

import csv
import io
import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .augmentor import (
    TargetSpace,
    TargetSpaceError,
    fit_for_dataset,
    one_hot_target,
    serialize_target,
)
from .backends import Backend, GenerationRequest, OracleBackend, ProxyBackend, RemoteBackend
from .baselines import fit_mlp, predict_mlp
from .ingest import Dataset, SplitSpec, split
from .metadata import ReformattedMetadata
from .outparse import STATUS_OK, parse_generation
from .promptgen import VARIANT_LIGHT, assemble_prompt, build_instruction
from .serializer import serialize_features

REPORT_SCHEMA_TAG = "tabprompt-report/1"

PARSER_PROBS = "probs"
PARSER_CLASS_LABEL = "class-label"

_CLASS_STATEMENT = re.compile(r"class\s+(\d+)")

MODEL_ORACLE = "oracle"
MODEL_PROXY = "proxy"
MODEL_ENSEMBLE = "ensemble"
MODEL_MLP = "mlp"
MODEL_REMOTE = "remote"

SWEEP_RATIOS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)


class EvalError(RuntimeError):
    pass


@dataclass(frozen=True)
class EvalResult:
    dataset_id: str
    model_id: str
    accuracy: float
    correct: int
    failed_parse: int
    total: int
    backend_id: str
    ratio: Optional[float] = None
    seed: Optional[int] = None
    skipped: int = 0
    error: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "dataset_id": self.dataset_id,
            "model_id": self.model_id,
            "accuracy": self.accuracy,
            "correct": self.correct,
            "failed_parse": self.failed_parse,
            "total": self.total,
            "backend_id": self.backend_id,
            "ratio": self.ratio,
            "seed": self.seed,
            "skipped": self.skipped,
            "error": self.error,
        }


@dataclass(frozen=True)
class Summary:
    mean: float
    median: float
    q25: float
    q75: float

    def to_json(self) -> dict:
        return {"mean": self.mean, "median": self.median, "q25": self.q25, "q75": self.q75}


def aggregate(values: Sequence[float]) -> Summary:
    vals = np.asarray(list(values), dtype=np.float64)
    if vals.size == 0:
        raise EvalError("cannot aggregate an empty list")
    q25, med, q75 = np.percentile(vals, [25, 50, 75])
    return Summary(mean=float(vals.mean()), median=float(med), q25=float(q25), q75=float(q75))


def average_tie_ranks(values: Sequence[float]) -> list[float]:
    """1-based descending ranks; tied values share the average of their slots."""
    vals = list(values)
    n = len(vals)
    order = sorted(range(n), key=lambda i: (-vals[i], i))
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and vals[order[j + 1]] == vals[order[i]]:
            j += 1
        avg = (i + j + 2) / 2.0  # slots i+1 .. j+1
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


@dataclass(frozen=True)
class RankTable:
    model_ids: tuple[str, ...]
    per_dataset: dict[str, dict[str, float]]  # dataset -> model -> rank
    aggregates: dict[str, Summary]  # model -> summary of its ranks
    warnings: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "model_ids": list(self.model_ids),
            "per_dataset": self.per_dataset,
            "aggregates": {m: s.to_json() for m, s in self.aggregates.items()},
            "warnings": list(self.warnings),
        }


def rank_models(
    accuracies: dict[str, dict[str, float]], model_ids: Sequence[str]
) -> RankTable:
    """Rank models per dataset by descending accuracy with average ties.

    Missing cells score 0.0 (rank last) and are reported as warnings.
    """
    model_ids = tuple(model_ids)
    warnings = []
    per_dataset: dict[str, dict[str, float]] = {}
    for ds in sorted(accuracies):
        row = accuracies[ds]
        vals = []
        for m in model_ids:
            if m in row:
                vals.append(row[m])
            else:
                warnings.append(f"dataset {ds!r}: model {m!r} missing, scored 0.0")
                vals.append(0.0)
        ranks = average_tie_ranks(vals)
        per_dataset[ds] = {m: ranks[i] for i, m in enumerate(model_ids)}
    aggregates = {
        m: aggregate([per_dataset[ds][m] for ds in per_dataset]) for m in model_ids
    }
    return RankTable(
        model_ids=model_ids,
        per_dataset=per_dataset,
        aggregates=aggregates,
        warnings=tuple(warnings),
    )


def parse_class_statement(text: str, expected: int) -> Optional[int]:
    """Literal "class {t}" scanner for backends that answer with a class
    number instead of a probability vector."""
    m = _CLASS_STATEMENT.search(text)
    if m is None:
        return None
    t = int(m.group(1))
    return t if 0 <= t < expected else None


def _scoreable_rows(test: Dataset, space: TargetSpace) -> tuple[list[int], list[int], int]:
    """Indices of test rows with a usable label, their class indices, and the
    count of rows skipped because the train-time space cannot express them."""
    j = test.column_index(test.target_column)
    keep: list[int] = []
    truth: list[int] = []
    skipped = 0
    for i, row in enumerate(test.rows):
        if row[j] is None:
            skipped += 1
            continue
        try:
            truth.append(space.index_of(row[j]))
        except (TargetSpaceError, ValueError):
            skipped += 1
            continue
        keep.append(i)
    return keep, truth, skipped


def evaluate(
    test: Dataset,
    space: TargetSpace,
    backend: Backend,
    meta: Optional[ReformattedMetadata] = None,
    variant: str = VARIANT_LIGHT,
    model_id: Optional[str] = None,
    parser: str = PARSER_PROBS,
    max_new_tokens: int = 64,
    ratio: Optional[float] = None,
    seed: Optional[int] = None,
) -> EvalResult:
    """Prompt every scoreable test row, generate, parse, and score."""
    keep, truth, skipped = _scoreable_rows(test, space)
    if not keep:
        raise EvalError(f"dataset {test.id!r}: no scoreable test rows")
    instructions = build_instruction(space)
    reqs = [
        GenerationRequest(
            prompt=assemble_prompt(variant, meta, serialize_features(test.rows[i], test), instructions),
            max_new_tokens=max_new_tokens,
            dataset_id=test.id,
            row_id=test.row_ids[i],
        )
        for i in keep
    ]
    responses = backend.batch_generate(reqs)
    correct = 0
    failed = 0
    for resp, true_class in zip(responses, truth):
        if not resp.ok:
            failed += 1
            continue
        if parser == PARSER_CLASS_LABEL:
            predicted = parse_class_statement(resp.text, space.n_classes)
            if predicted is None:
                failed += 1
                continue
        else:
            parsed = parse_generation(resp.text, space.n_classes)
            if parsed.parse_status != STATUS_OK:
                failed += 1
                continue
            predicted = parsed.predicted_class
        if predicted == true_class:
            correct += 1
    total = len(keep)
    return EvalResult(
        dataset_id=test.id,
        model_id=model_id or backend.backend_id,
        accuracy=correct / total,
        correct=correct,
        failed_parse=failed,
        total=total,
        backend_id=backend.backend_id,
        ratio=ratio,
        seed=seed,
        skipped=skipped,
    )


@dataclass
class RegistryEntry:
    dataset: Dataset  # full dataset, cutoff already applied
    meta: ReformattedMetadata


@dataclass
class SweepConfig:
    ratios: tuple[float, ...] = SWEEP_RATIOS
    model_ids: tuple[str, ...] = (MODEL_PROXY, MODEL_MLP)
    split_seed: int = 0
    train_seed: int = 0
    variant: str = VARIANT_LIGHT
    max_rows: Optional[int] = None  # few-shot size filter over full datasets
    rounds: int = 100
    max_depth: int = 6
    lr: float = 0.3
    mlp_hidden: int = 100
    mlp_epochs: int = 100
    parallelism: int = 1
    remote: Optional[object] = None  # RemoteConfig when "remote" is requested

    def __post_init__(self):
        for r in self.ratios:
            if not 0.0 < r < 1.0:
                raise EvalError(f"ratio {r} outside (0,1)")
        if MODEL_REMOTE in self.model_ids and self.remote is None:
            raise EvalError("remote model requested without a remote configuration")


@dataclass
class SweepReport:
    results: list[EvalResult]
    ranks: dict[str, RankTable]  # keyed by formatted ratio
    warnings: list[str] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "schema": REPORT_SCHEMA_TAG,
            "config": self.config,
            "results": [r.to_json() for r in self.results],
            "ranks": {k: v.to_json() for k, v in self.ranks.items()},
            "warnings": list(self.warnings),
        }


def _ratio_key(ratio: Optional[float]) -> str:
    return "" if ratio is None else f"{ratio:.2f}"


def _evaluate_cell(
    entry: RegistryEntry, ratio: float, cfg: SweepConfig
) -> list[EvalResult]:
    """All requested models on one (dataset, ratio) cell; errors per cell."""
    d = entry.dataset
    out: list[EvalResult] = []

    def failure(model_id: str, message: str) -> EvalResult:
        return EvalResult(
            dataset_id=d.id,
            model_id=model_id,
            accuracy=0.0,
            correct=0,
            failed_parse=0,
            total=0,
            backend_id="none",
            ratio=ratio,
            seed=cfg.split_seed,
            error=message,
        )

    try:
        train, test = split(d, SplitSpec(train_ratio=ratio, seed=cfg.split_seed))
        from .augmentor import space_for_dataset

        space = space_for_dataset(train)
    except Exception as e:
        return [failure(m, f"split/space failed: {e}") for m in cfg.model_ids]

    keep, truth, _ = _scoreable_rows(test, space)
    needs_fit = bool({MODEL_PROXY, MODEL_ENSEMBLE} & set(cfg.model_ids))
    model = None
    if needs_fit:
        try:
            model = fit_for_dataset(
                train, space, rounds=cfg.rounds, max_depth=cfg.max_depth, lr=cfg.lr
            )
        except Exception as e:
            for m in cfg.model_ids:
                if m in (MODEL_PROXY, MODEL_ENSEMBLE):
                    out.append(failure(m, f"ensemble fit failed: {e}"))
            model = None

    for model_id in cfg.model_ids:
        try:
            if model_id == MODEL_ORACLE:
                refs = {
                    (test.id, test.row_ids[i]): serialize_target(
                        one_hot_target(space.n_classes, t)
                    )
                    for i, t in zip(keep, truth)
                }
                backend = OracleBackend(refs)
                out.append(
                    evaluate(
                        test, space, backend, meta=entry.meta, variant=cfg.variant,
                        model_id=model_id, ratio=ratio, seed=cfg.split_seed,
                    )
                )
            elif model_id == MODEL_PROXY:
                if model is None:
                    continue  # failure row already recorded
                backend = ProxyBackend.from_dataset(model, test)
                out.append(
                    evaluate(
                        test, space, backend, meta=entry.meta, variant=cfg.variant,
                        model_id=model_id, ratio=ratio, seed=cfg.split_seed,
                    )
                )
            elif model_id == MODEL_ENSEMBLE:
                if model is None:
                    continue
                X = model.encoder.transform([test.rows[i] for i in keep], test.columns)
                pred = model.predict(X)
                correct = int(np.sum(pred == np.asarray(truth)))
                out.append(
                    EvalResult(
                        dataset_id=d.id, model_id=model_id,
                        accuracy=correct / len(keep), correct=correct,
                        failed_parse=0, total=len(keep), backend_id="direct",
                        ratio=ratio, seed=cfg.split_seed,
                        skipped=len(test.rows) - len(keep),
                    )
                )
            elif model_id == MODEL_MLP:
                from .augmentor import ordinal_encode

                enc, Xtr = ordinal_encode(
                    train.rows, train.columns, exclude=(train.target_column,)
                )
                jc = train.column_index(train.target_column)
                ytr = [space.index_of(r[jc]) for r in train.rows if r[jc] is not None]
                Xtr = enc.transform([r for r in train.rows if r[jc] is not None], train.columns)
                mlp = fit_mlp(
                    Xtr, ytr, hidden=cfg.mlp_hidden, epochs=cfg.mlp_epochs,
                    seed=cfg.train_seed,
                )
                Xte = enc.transform([test.rows[i] for i in keep], test.columns)
                pred = predict_mlp(mlp, Xte)
                correct = int(np.sum(pred == np.asarray(truth)))
                out.append(
                    EvalResult(
                        dataset_id=d.id, model_id=model_id,
                        accuracy=correct / len(keep), correct=correct,
                        failed_parse=0, total=len(keep), backend_id="direct",
                        ratio=ratio, seed=cfg.train_seed,
                        skipped=len(test.rows) - len(keep),
                    )
                )
            elif model_id == MODEL_REMOTE:
                backend = RemoteBackend(cfg.remote)
                out.append(
                    evaluate(
                        test, space, backend, meta=entry.meta, variant=cfg.variant,
                        model_id=model_id, ratio=ratio, seed=cfg.split_seed,
                    )
                )
            else:
                out.append(failure(model_id, f"unknown model {model_id!r}"))
        except Exception as e:
            out.append(failure(model_id, str(e)))
    return out


def fewshot_sweep(entries: Sequence[RegistryEntry], cfg: SweepConfig) -> SweepReport:
    """Every (dataset, ratio, model) cell, ranked per ratio and summarized."""
    if cfg.max_rows is not None:
        big = [e.dataset.id for e in entries if len(e.dataset.rows) > cfg.max_rows]
        if big:
            raise EvalError(
                f"datasets exceed the few-shot size filter ({cfg.max_rows} rows): {big}"
            )
    cells = [(e, r) for e in entries for r in cfg.ratios]
    if cfg.parallelism > 1:
        with ThreadPoolExecutor(max_workers=cfg.parallelism) as pool:
            futures = [pool.submit(_evaluate_cell, e, r, cfg) for e, r in cells]
            groups = [f.result() for f in futures]
    else:
        groups = [_evaluate_cell(e, r, cfg) for e, r in cells]

    results: list[EvalResult] = [res for group in groups for res in group]
    results.sort(key=lambda r: (r.ratio, r.dataset_id, r.model_id))
    warnings = [
        f"{r.dataset_id} @ {_ratio_key(r.ratio)} / {r.model_id}: {r.error}"
        for r in results
        if r.error
    ]

    ranks: dict[str, RankTable] = {}
    for ratio in cfg.ratios:
        grid: dict[str, dict[str, float]] = {}
        for r in results:
            if r.ratio == ratio and r.error is None:
                grid.setdefault(r.dataset_id, {})[r.model_id] = r.accuracy
        for e in entries:
            grid.setdefault(e.dataset.id, {})
        table = rank_models(grid, cfg.model_ids)
        ranks[_ratio_key(ratio)] = table
        warnings.extend(table.warnings)

    return SweepReport(
        results=results,
        ranks=ranks,
        warnings=warnings,
        config={
            "ratios": list(cfg.ratios),
            "model_ids": list(cfg.model_ids),
            "split_seed": cfg.split_seed,
            "train_seed": cfg.train_seed,
            "variant": cfg.variant,
            "rounds": cfg.rounds,
            "max_depth": cfg.max_depth,
            "lr": cfg.lr,
            "mlp_hidden": cfg.mlp_hidden,
            "mlp_epochs": cfg.mlp_epochs,
        },
    )


def _rank_for(report: SweepReport, r: EvalResult) -> Optional[float]:
    table = report.ranks.get(_ratio_key(r.ratio))
    if table is None:
        return None
    return table.per_dataset.get(r.dataset_id, {}).get(r.model_id)


def emit_report(report: SweepReport, out_dir: str | Path) -> tuple[Path, Path]:
    """Write report.json (full fidelity) and report.csv (flat, plottable)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / "report.json"
    csv_path = out_dir / "report.csv"

    json_path.write_text(
        json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["dataset_id", "model_id", "ratio", "accuracy", "rank"])
    for r in report.results:
        rank = _rank_for(report, r)
        writer.writerow(
            [
                r.dataset_id,
                r.model_id,
                _ratio_key(r.ratio),
                f"{r.accuracy:.6f}",
                "" if rank is None else f"{rank:.2f}",
            ]
        )
    csv_path.write_text(buf.getvalue(), encoding="utf-8")
    return json_path, csv_path


def read_report(path: str | Path) -> SweepReport:
    """Load a JSON report back into memory (results and warnings)."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("schema") != REPORT_SCHEMA_TAG:
        raise EvalError(f"unsupported report schema: {doc.get('schema')!r}")
    results = [
        EvalResult(
            dataset_id=r["dataset_id"],
            model_id=r["model_id"],
            accuracy=r["accuracy"],
            correct=r["correct"],
            failed_parse=r["failed_parse"],
            total=r["total"],
            backend_id=r["backend_id"],
            ratio=r["ratio"],
            seed=r["seed"],
            skipped=r["skipped"],
            error=r["error"],
        )
        for r in doc["results"]
    ]
    ranks = {
        k: RankTable(
            model_ids=tuple(v["model_ids"]),
            per_dataset=v["per_dataset"],
            aggregates={m: Summary(**s) for m, s in v["aggregates"].items()},
            warnings=tuple(v["warnings"]),
        )
        for k, v in doc["ranks"].items()
    }
    return SweepReport(
        results=results, ranks=ranks, warnings=list(doc["warnings"]), config=doc["config"]
    )
