"""Ordinal feature encoding for the tree ensemble.

Categorical (text/boolean) columns map category -> integer code in order of
first appearance in the training rows. Two reserved codes sit past the seen
range: |seen| for categories first observed at transform time and |seen|+1
for missing cells. Numeric columns pass through; their missing cells take the
training-column mean so tree thresholds stay meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..ingest import KIND_FLOAT, KIND_INTEGER, ColumnSchema, Row


@dataclass
class OrdinalEncoder:
    columns: list[ColumnSchema]
    categories: dict[str, list[str]] = field(default_factory=dict)  # per text/bool column
    numeric_fill: dict[str, float] = field(default_factory=dict)  # per numeric column

    @property
    def feature_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def transform(self, rows: Sequence[Row], schema: Sequence[ColumnSchema]) -> np.ndarray:
        """Encode rows laid out per `schema` into the encoder's column order."""
        pos = {c.name: j for j, c in enumerate(schema)}
        X = np.empty((len(rows), len(self.columns)), dtype=np.float64)
        for k, col in enumerate(self.columns):
            j = pos[col.name]
            if col.name in self.categories:
                codes = {c: i for i, c in enumerate(self.categories[col.name])}
                unseen = len(codes)
                missing = unseen + 1
                for i, r in enumerate(rows):
                    cell = r[j]
                    if cell is None:
                        X[i, k] = missing
                    else:
                        X[i, k] = codes.get(cell, unseen)
            else:
                fill = self.numeric_fill[col.name]
                for i, r in enumerate(rows):
                    cell = r[j]
                    X[i, k] = fill if cell is None else float(cell)
        return X

    def to_json(self) -> dict:
        return {
            "columns": [{"name": c.name, "kind": c.kind} for c in self.columns],
            "categories": self.categories,
            "numeric_fill": self.numeric_fill,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "OrdinalEncoder":
        return cls(
            columns=[ColumnSchema(name=c["name"], kind=c["kind"]) for c in doc["columns"]],
            categories=dict(doc["categories"]),
            numeric_fill={k: float(v) for k, v in doc["numeric_fill"].items()},
        )


def ordinal_encode(
    rows: Sequence[Row],
    schema: Sequence[ColumnSchema],
    exclude: Sequence[str] = (),
) -> tuple[OrdinalEncoder, np.ndarray]:
    """Fit an encoder on training rows and return it with the encoded matrix."""
    skip = set(exclude)
    kept = [c for c in schema if c.name not in skip]
    if not kept:
        raise ValueError("no feature columns left to encode")
    pos = {c.name: j for j, c in enumerate(schema)}
    categories: dict[str, list[str]] = {}
    numeric_fill: dict[str, float] = {}
    for col in kept:
        j = pos[col.name]
        if col.kind in (KIND_INTEGER, KIND_FLOAT):
            seen = [float(r[j]) for r in rows if r[j] is not None]
            numeric_fill[col.name] = float(np.mean(seen)) if seen else 0.0
        else:
            order: dict[str, None] = {}
            for r in rows:
                if r[j] is not None and r[j] not in order:
                    order[r[j]] = None
            categories[col.name] = list(order)
    enc = OrdinalEncoder(columns=kept, categories=categories, numeric_fill=numeric_fill)
    return enc, enc.transform(rows, schema)
