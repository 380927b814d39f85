"""Read and validate the upstream corpus JSONL format.

Each line is one training record; the fields used here are a stable subset
of what the corpus builder writes. Validation happens up front so a bad
corpus fails before any model is constructed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


class CorpusError(ValueError):
    pass


# field -> required type; prompt/reference must also be non-empty
_REQUIRED = {
    "prompt": str,
    "reference": str,
    "dataset_id": str,
    "row_id": int,
    "num_classes": int,
    "true_class": int,
    "variant": str,
}


@dataclass(frozen=True)
class TrainRecord:
    prompt: str
    reference: str
    dataset_id: str
    row_id: int
    num_classes: int
    true_class: int
    variant: str


def load_corpus(path: str | Path) -> list[TrainRecord]:
    """Parse a corpus file; raises CorpusError on any schema violation."""
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"corpus file not found: {path}")
    records: list[TrainRecord] = []
    with path.open("r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusError(f"line {lineno}: not valid JSON ({e})") from e
            if not isinstance(doc, dict):
                raise CorpusError(f"line {lineno}: record must be a JSON object")
            for field, kind in _REQUIRED.items():
                if field not in doc:
                    raise CorpusError(f"line {lineno}: missing field {field!r}")
                # bool is an int subclass; reject it for the integer fields
                if not isinstance(doc[field], kind) or isinstance(doc[field], bool) and kind is int:
                    raise CorpusError(
                        f"line {lineno}: field {field!r} must be {kind.__name__}"
                    )
            if not doc["prompt"] or not doc["reference"]:
                raise CorpusError(f"line {lineno}: prompt and reference must be non-empty")
            if doc["num_classes"] < 2:
                raise CorpusError(f"line {lineno}: num_classes must be >= 2")
            if not 0 <= doc["true_class"] < doc["num_classes"]:
                raise CorpusError(f"line {lineno}: true_class out of range")
            records.append(TrainRecord(**{k: doc[k] for k in _REQUIRED}))
    if not records:
        raise CorpusError(f"corpus {path} holds no records")
    return records
