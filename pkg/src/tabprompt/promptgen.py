"""Prompt assembly and corpus emission.

Two prompt variants share one skeleton: the heavy variant carries the
reformatted dataset description, the light variant drops that block. Corpora
are line-delimited JSON, one record per training row, sorted by
(dataset_id, row_id) so identical inputs always hash identically.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .augmentor import (
    TargetSpace,
    TreeEnsembleModel,
    augment,
    one_hot_target,
    serialize_class,
    serialize_target,
)
from .ingest import Dataset
from .metadata import ReformattedMetadata
from .serializer import serialize_features

VARIANT_HEAVY = "heavy"
VARIANT_LIGHT = "light"
MODE_AUGMENTED = "augmented"
MODE_ONEHOT = "onehot"

HEAVY_TEMPLATE = (
    "Below is the description of a dataset, an object profile from the dataset and a "
    "target description. Predict the target by the given information of the object.\n"
    "# Dataset description: {metadata}\n"
    "# Object description: {features}\n"
    "# You should return the probability of each class by: \n"
    "{instructions}\n"
    "# Answer: \n"
)

LIGHT_TEMPLATE = (
    "Below is a dataset. Predict the target by the given information of the object.\n"
    "# Object description: {features}\n"
    "# You should return the probability of each class by: \n"
    "{instructions}\n"
    "# Answer: \n"
)


class PromptError(ValueError):
    pass


def build_instruction(space: TargetSpace) -> str:
    if space.n_classes < 2:
        raise PromptError("need at least 2 classes")
    return serialize_class(space)


def assemble_prompt(
    variant: str,
    meta: Optional[ReformattedMetadata],
    features: str,
    instructions: str,
) -> str:
    if not features or not instructions:
        raise PromptError("features and instructions must be non-empty")
    # the serialized row ends with ".\n"; the template supplies the newline
    features = features.rstrip("\n")
    if variant == VARIANT_HEAVY:
        if meta is None or not meta.description:
            raise PromptError("heavy prompts need reformatted metadata")
        return (
            HEAVY_TEMPLATE.replace("{metadata}", meta.description)
            .replace("{features}", features)
            .replace("{instructions}", instructions)
        )
    if variant == VARIANT_LIGHT:
        return LIGHT_TEMPLATE.replace("{features}", features).replace(
            "{instructions}", instructions
        )
    raise PromptError(f"unknown variant {variant!r}")


@dataclass(frozen=True)
class CorpusRecord:
    dataset_id: str
    row_id: int
    variant: str
    prompt: str
    reference: str
    class_details: str
    num_classes: int
    true_class: int

    @property
    def prompt_chars(self) -> int:
        return len(self.prompt)

    def to_json(self) -> dict:
        return {
            "dataset_id": self.dataset_id,
            "row_id": self.row_id,
            "variant": self.variant,
            "prompt": self.prompt,
            "reference": self.reference,
            "class_details": self.class_details,
            "num_classes": self.num_classes,
            "true_class": self.true_class,
            "prompt_chars": self.prompt_chars,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "CorpusRecord":
        return cls(
            dataset_id=doc["dataset_id"],
            row_id=int(doc["row_id"]),
            variant=doc["variant"],
            prompt=doc["prompt"],
            reference=doc["reference"],
            class_details=doc["class_details"],
            num_classes=int(doc["num_classes"]),
            true_class=int(doc["true_class"]),
        )


@dataclass(frozen=True)
class CorpusManifest:
    record_count: int
    per_dataset: dict[str, int]
    variant: str
    mode: str
    seeds: dict[str, int]
    content_hash: str

    def to_json(self) -> dict:
        return {
            "record_count": self.record_count,
            "per_dataset": self.per_dataset,
            "variant": self.variant,
            "mode": self.mode,
            "seeds": self.seeds,
            "content_hash": self.content_hash,
        }


@dataclass
class PreparedDataset:
    """Everything corpus emission needs for one dataset's training split."""

    dataset: Dataset  # training rows only
    meta: ReformattedMetadata
    space: TargetSpace
    model: Optional[TreeEnsembleModel] = None  # required in augmented mode


def _dataset_records(
    prep: PreparedDataset, variant: str, mode: str
) -> list[CorpusRecord]:
    d = prep.dataset
    if d.target_column is None:
        raise PromptError(f"dataset {d.id!r} has no target column")
    if mode == MODE_AUGMENTED and prep.model is None:
        raise PromptError(f"dataset {d.id!r} has no fitted model for augmented mode")
    if mode not in (MODE_AUGMENTED, MODE_ONEHOT):
        raise PromptError(f"unknown mode {mode!r}")
    instructions = build_instruction(prep.space)
    j = d.column_index(d.target_column)
    if mode == MODE_AUGMENTED:
        X = prep.model.encoder.transform(d.rows, d.columns)
    records = []
    for i, row in enumerate(d.rows):
        if row[j] is None:
            continue  # unlabeled rows cannot supervise
        true_class = prep.space.index_of(row[j])
        if mode == MODE_AUGMENTED:
            target = augment(prep.model, X[i], true_class)
        else:
            target = one_hot_target(prep.space.n_classes, true_class)
        prompt = assemble_prompt(variant, prep.meta, serialize_features(row, d), instructions)
        records.append(
            CorpusRecord(
                dataset_id=d.id,
                row_id=d.row_ids[i],
                variant=variant,
                prompt=prompt,
                reference=serialize_target(target),
                class_details=instructions,
                num_classes=prep.space.n_classes,
                true_class=true_class,
            )
        )
    return records


def emit_corpus(
    prepared: Sequence[PreparedDataset],
    variant: str,
    mode: str,
    out_path: str | Path,
    seeds: Optional[dict[str, int]] = None,
) -> CorpusManifest:
    """Write one corpus file plus its manifest; returns the manifest."""
    records: list[CorpusRecord] = []
    for prep in prepared:
        records.extend(_dataset_records(prep, variant, mode))
    records.sort(key=lambda r: (r.dataset_id, r.row_id))

    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    h = hashlib.sha256()
    with out_path.open("w", encoding="utf-8", newline="\n") as f:
        for r in records:
            line = json.dumps(r.to_json(), sort_keys=True, separators=(",", ":"))
            f.write(line + "\n")
            h.update(line.encode("utf-8"))
            h.update(b"\n")

    per_dataset: dict[str, int] = {}
    for r in records:
        per_dataset[r.dataset_id] = per_dataset.get(r.dataset_id, 0) + 1
    manifest = CorpusManifest(
        record_count=len(records),
        per_dataset=dict(sorted(per_dataset.items())),
        variant=variant,
        mode=mode,
        seeds=dict(seeds or {}),
        content_hash=h.hexdigest(),
    )
    manifest_path = out_path.with_name(out_path.name + ".manifest.json")
    manifest_path.write_text(
        json.dumps(manifest.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return manifest


def read_corpus(path: str | Path) -> list[CorpusRecord]:
    """Load a line-delimited corpus file back into records."""
    records = []
    with Path(path).open("r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                records.append(CorpusRecord.from_json(json.loads(line)))
    return records
