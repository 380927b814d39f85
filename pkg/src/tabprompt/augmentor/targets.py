"""Target-space construction and confidence-augmented targets.

Discrete targets become one class per distinct label (first-appearance
order); continuous targets are cut at the 25/50/75 percentiles into four
bins. augment() turns the calibrated model's probability vector into the
supervision string's vector: swap so the true class holds the argmax, round
to whole cents, and settle the cent grid so the rounded entries still sum to
exactly 1.00 with the true class as strict first maximum.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..ingest import Dataset, TargetKind, detect_target_kind
from ..serializer import format_float, format_prob_cents
from .boosting import TreeEnsembleModel, fit_external_predictor
from .encoding import ordinal_encode

ORIGIN_DISCRETE = "discrete"
ORIGIN_BINNED = "binned"


class TargetSpaceError(ValueError):
    pass


@dataclass(frozen=True)
class TargetClass:
    index: int
    label: str
    explanation: str


@dataclass(frozen=True)
class TargetSpace:
    classes: tuple[TargetClass, ...]
    origin: str
    edges: tuple[float, ...] = ()  # (q1, q2, q3) when binned

    def __post_init__(self):
        labels = [c.label for c in self.classes]
        if len(set(labels)) != len(labels):
            raise TargetSpaceError("class labels must be distinct")
        if [c.index for c in self.classes] != list(range(len(self.classes))):
            raise TargetSpaceError("class indices must be 0..n-1 in order")
        if self.origin == ORIGIN_BINNED and len(self.classes) != 4:
            raise TargetSpaceError("binned spaces have exactly 4 classes")

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(c.label for c in self.classes)

    def index_of(self, cell: str) -> int:
        """Class index of a raw target cell."""
        if self.origin == ORIGIN_BINNED:
            return int(np.digitize(float(cell), self.edges))
        try:
            return self.labels.index(cell)
        except ValueError:
            raise TargetSpaceError(f"label {cell!r} not in target space") from None

    def to_json(self) -> dict:
        return {
            "origin": self.origin,
            "classes": [
                {"index": c.index, "label": c.label, "explanation": c.explanation}
                for c in self.classes
            ],
            "edges": list(self.edges),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "TargetSpace":
        return cls(
            classes=tuple(
                TargetClass(index=c["index"], label=c["label"], explanation=c["explanation"])
                for c in doc["classes"]
            ),
            origin=doc["origin"],
            edges=tuple(float(e) for e in doc.get("edges", [])),
        )


def one_hot_space(labels: Sequence[str], explanations: Optional[dict] = None) -> TargetSpace:
    """Classes indexed by order of first appearance in the training labels."""
    order: dict[str, None] = {}
    for v in labels:
        order[v] = None
    uniq = list(order)
    if len(uniq) < 2:
        raise TargetSpaceError("need at least 2 distinct labels")
    expl = explanations or {}
    return TargetSpace(
        classes=tuple(
            TargetClass(index=i, label=v, explanation=str(expl.get(v, v)))
            for i, v in enumerate(uniq)
        ),
        origin=ORIGIN_DISCRETE,
    )


def bin_continuous(values: Sequence[float]) -> TargetSpace:
    """Quartile bins over the empirical distribution, ascending order."""
    vals = np.asarray(list(values), dtype=np.float64)
    if len(np.unique(vals)) < 4:
        raise TargetSpaceError("need at least 4 distinct values to bin")
    q1, q2, q3 = (float(q) for q in np.percentile(vals, [25, 50, 75]))
    if not q1 < q2 < q3:
        raise TargetSpaceError("degenerate bins: percentile edges collide")
    e1, e2, e3 = format_float(q1), format_float(q2), format_float(q3)
    labels = [f"<{e1}", f"{e1} - {e2}", f"{e2} - {e3}", f">{e3}"]
    return TargetSpace(
        classes=tuple(
            TargetClass(index=i, label=lab, explanation=lab) for i, lab in enumerate(labels)
        ),
        origin=ORIGIN_BINNED,
        edges=(q1, q2, q3),
    )


def space_for_dataset(d: Dataset, kind: Optional[TargetKind] = None) -> TargetSpace:
    """Target space from the training split's target column."""
    if kind is None:
        kind = detect_target_kind(d)
    j = d.column_index(d.target_column)
    values = [r[j] for r in d.rows if r[j] is not None]
    if kind.is_discrete:
        return one_hot_space(values)
    return bin_continuous([float(v) for v in values])


@dataclass(frozen=True)
class AugmentedTarget:
    probs: tuple[float, ...]
    true_class: int

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if not 0 <= self.true_class < p.size:
            raise TargetSpaceError("true_class out of range")
        if p.min() < 0.0 or p.max() > 1.0:
            raise TargetSpaceError("probabilities must lie in [0,1]")
        if abs(float(p.sum()) - 1.0) > 1e-6:
            raise TargetSpaceError("probabilities must sum to 1")
        if int(np.argmax(p)) != self.true_class:
            raise TargetSpaceError("true_class must hold the (first) argmax")


def settle_cents(probs: Sequence[float], pivot: int) -> list[int]:
    """Round probabilities to whole cents so they sum to 100 with the pivot
    entry as strict first maximum.

    Every non-pivot entry rounds half-up; the pivot absorbs the residue, and
    single cents migrate from the current leader to the pivot until it wins
    the first-max rule. Keeps entries in [0, 100].
    """
    p = np.asarray(probs, dtype=np.float64)
    if not 0 <= pivot < p.size:
        raise TargetSpaceError("pivot out of range")
    cents = [int(np.floor(v * 100.0 + 0.5)) for v in p]
    cents[pivot] = 100 - sum(c for i, c in enumerate(cents) if i != pivot)

    def first_max(xs: list[int]) -> int:
        best = 0
        for i in range(1, len(xs)):
            if xs[i] > xs[best]:
                best = i
        return best

    while cents[pivot] < 0 or first_max(cents) != pivot:
        donor = -1
        for i, c in enumerate(cents):
            if i != pivot and (donor < 0 or c > cents[donor]):
                donor = i
        cents[donor] -= 1
        cents[pivot] += 1
    return cents


def augment_probs(probs: Sequence[float], true_class: int) -> AugmentedTarget:
    """Swap the argmax entry onto the true class, then settle onto the cent
    grid so the serialized two-decimal vector keeps that argmax and sums to 1."""
    p = np.asarray(probs, dtype=np.float64).copy()
    if not 0 <= true_class < p.size:
        raise TargetSpaceError("true_class out of range")
    top = int(np.argmax(p))
    if top != true_class:
        p[top], p[true_class] = p[true_class], p[top]
    cents = settle_cents(p, true_class)
    return AugmentedTarget(probs=tuple(c / 100.0 for c in cents), true_class=true_class)


def augment(model: TreeEnsembleModel, x: np.ndarray, true_class: int) -> AugmentedTarget:
    """Confidence-augmented target for one encoded row."""
    row = np.asarray(x, dtype=np.float64).reshape(1, -1)
    p = model.predict_proba(row)[0]
    return augment_probs(p, true_class)


def one_hot_target(n_classes: int, true_class: int) -> AugmentedTarget:
    """Ablation-mode target: all mass on the true class."""
    probs = [0.0] * n_classes
    probs[true_class] = 1.0
    return AugmentedTarget(probs=tuple(probs), true_class=true_class)


def serialize_target(a: AugmentedTarget) -> str:
    parts = [
        f"class {i}: {format_prob_cents(int(np.floor(p * 100.0 + 0.5)))}"
        for i, p in enumerate(a.probs)
    ]
    return "; ".join(parts) + "."


def serialize_class(space: TargetSpace) -> str:
    if space.n_classes < 2:
        raise TargetSpaceError("need at least 2 classes")
    return "; ".join(f'class {c.index} stands for "{c.explanation}"' for c in space.classes)


def fit_for_dataset(
    train: Dataset,
    space: TargetSpace,
    rounds: int = 100,
    max_depth: int = 6,
    lr: float = 0.3,
) -> TreeEnsembleModel:
    """Encode a training split and fit the calibrated ensemble for it."""
    enc, X = ordinal_encode(train.rows, train.columns, exclude=(train.target_column,))
    j = train.column_index(train.target_column)
    y = []
    for r in train.rows:
        if r[j] is None:
            raise TargetSpaceError("training rows must have a target value")
        y.append(space.index_of(r[j]))
    model = fit_external_predictor(
        X, y, n_classes=space.n_classes, rounds=rounds, max_depth=max_depth, lr=lr
    )
    model.encoder = enc
    model.space = space
    return model
