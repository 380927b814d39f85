"""Synthetic datasets for tests and benchmarks.

Everything here returns either plain matrices for model-level checks or full
Dataset objects (string cells, inferred schema) for pipeline-level runs.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .ingest import Dataset, infer_column_schema
from .metadata import fallback_reformat


def xor_matrix() -> tuple[np.ndarray, np.ndarray]:
    """The 4-cell parity instance on two binary features."""
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    y = np.array([0, 1, 1, 0], dtype=np.int64)
    return X, y


def blobs_matrix(
    n: int = 500, margin: float = 1.0, seed: int = 0, noise_features: int = 3
) -> tuple[np.ndarray, np.ndarray]:
    """Two clusters split on feature 0 by an empty band of width `margin`."""
    rng = np.random.default_rng(seed)
    y = (rng.random(n) < 0.5).astype(np.int64)
    x0 = np.where(y == 0, rng.uniform(0.0, 1.0, n), rng.uniform(1.0 + margin, 2.0 + margin, n))
    rest = rng.normal(0.0, 1.0, size=(n, noise_features))
    return np.column_stack([x0, rest]), y


_LABELS = ["Alpha", "Beta", "Gamma", "Delta", "Epsilon", "Zeta"]


def make_classification_dataset(
    dataset_id: str,
    n_rows: int = 120,
    n_numeric: int = 3,
    n_categorical: int = 2,
    n_classes: int = 3,
    seed: int = 0,
    missing_rate: float = 0.0,
    flip_rate: float = 0.0,
    target_name: str = "Outcome",
) -> Dataset:
    """A learnable tabular dataset with string cells and a text target.

    Numeric features cluster around class-specific means; categorical
    features echo the class with occasional noise, so tree models and the
    MLP both separate it easily unless flip_rate blurs the labels.
    """
    if n_classes > len(_LABELS):
        raise ValueError(f"at most {len(_LABELS)} classes supported")
    rng = np.random.default_rng(seed)
    y = rng.integers(0, n_classes, size=n_rows)
    names = (
        [f"measure_{k}" for k in range(n_numeric)]
        + [f"group_{k}" for k in range(n_categorical)]
        + [target_name]
    )
    rows = []
    for i in range(n_rows):
        cells: list[Optional[str]] = []
        for k in range(n_numeric):
            v = 3.0 * y[i] + rng.normal(0.0, 0.5) + 0.1 * k
            cells.append(f"{v:.4f}")
        for k in range(n_categorical):
            cls = int(y[i]) if rng.random() > 0.1 else int(rng.integers(0, n_classes))
            cells.append(f"kind{(cls + k) % n_classes}")
        label = int(y[i])
        if flip_rate > 0.0 and rng.random() < flip_rate:
            label = int(rng.integers(0, n_classes))
        cells.append(_LABELS[label])
        if missing_rate > 0.0:
            for j in range(len(cells) - 1):  # never blank the target
                if rng.random() < missing_rate:
                    cells[j] = None
        rows.append(tuple(cells))
    columns = [
        infer_column_schema(name, [r[j] for r in rows]) for j, name in enumerate(names)
    ]
    return Dataset(
        id=dataset_id,
        raw_metadata=f"Synthetic dataset {dataset_id} with {n_classes} outcome groups.",
        columns=columns,
        rows=rows,
        target_column=target_name,
    )


def make_regression_dataset(
    dataset_id: str,
    n_rows: int = 120,
    seed: int = 0,
    target_name: str = "charge",
) -> Dataset:
    """Continuous-target dataset; the target is a noisy function of x0."""
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(n_rows):
        x0 = rng.uniform(0.0, 10.0)
        x1 = rng.normal(0.0, 1.0)
        t = 100.0 * x0 + 20.0 * x1 + rng.normal(0.0, 5.0)
        rows.append((f"{x0:.4f}", f"{x1:.4f}", f"{t:.2f}"))
    names = ["exposure", "drift", target_name]
    columns = [
        infer_column_schema(name, [r[j] for r in rows]) for j, name in enumerate(names)
    ]
    return Dataset(
        id=dataset_id,
        raw_metadata=f"Synthetic dataset {dataset_id} with a continuous charge target.",
        columns=columns,
        rows=rows,
        target_column=target_name,
    )


def make_registry(n_datasets: int = 10, n_rows: int = 80, seed: int = 0):
    """Registry entries (dataset + offline metadata) for sweep-level tests."""
    from .evalharness import RegistryEntry

    entries = []
    for k in range(n_datasets):
        d = make_classification_dataset(
            f"synth-{k:02d}",
            n_rows=n_rows,
            n_classes=2 + (k % 3),
            seed=seed + 1000 * k,
            flip_rate=0.05 * (k % 4),
        )
        entries.append(RegistryEntry(dataset=d, meta=fallback_reformat(d)))
    return entries
