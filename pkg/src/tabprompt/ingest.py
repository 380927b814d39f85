"""Dataset loading: CSV parsing, schema inference, cutoff and splits.

A dataset is a header-first CSV plus a manifest entry naming it. Cells are
kept as raw strings (missing = empty cell -> None); column kinds are inferred
over the whole file once at load and drive all downstream rendering/encoding.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

Row = tuple  # tuple[Optional[str], ...]

_INT_RE = re.compile(r"^[+-]?[0-9]+$")
_BOOL_TOKENS = {"true", "false"}

KIND_INTEGER = "integer"
KIND_FLOAT = "float"
KIND_TEXT = "text"
KIND_BOOLEAN = "boolean"

#: integer target columns with at most this many distinct values are discrete
DISCRETE_MAX_DISTINCT = 20


class IngestError(ValueError):
    pass


@dataclass(frozen=True)
class ColumnSchema:
    name: str
    kind: str
    missing_count: int = 0


@dataclass(frozen=True)
class TargetKind:
    variant: str  # "discrete" | "continuous"
    labels: tuple = ()  # discrete: distinct labels in first-appearance order
    minimum: float = 0.0
    maximum: float = 0.0

    @property
    def is_discrete(self) -> bool:
        return self.variant == "discrete"


@dataclass(frozen=True)
class SplitSpec:
    train_ratio: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_ratio < 1.0:
            raise IngestError(f"train_ratio must be in (0,1), got {self.train_ratio}")


@dataclass
class Dataset:
    id: str
    raw_metadata: str
    columns: list[ColumnSchema]
    rows: list[Row]
    target_column: Optional[str] = None
    row_ids: list[int] = field(default_factory=list)

    def __post_init__(self):
        if not self.row_ids:
            self.row_ids = list(range(len(self.rows)))

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column_index(self, name: str) -> int:
        return self.column_names.index(name)

    def column_values(self, name: str) -> list:
        j = self.column_index(name)
        return [r[j] for r in self.rows]


def _cell_kind(cell: str) -> str:
    if cell.lower() in _BOOL_TOKENS:
        return KIND_BOOLEAN
    if _INT_RE.match(cell):
        return KIND_INTEGER
    try:
        v = float(cell)
    except ValueError:
        return KIND_TEXT
    if np.isnan(v) or np.isinf(v):
        return KIND_TEXT
    return KIND_FLOAT


def _join_kinds(a: str, b: str) -> str:
    if a == b:
        return a
    numeric = {KIND_INTEGER, KIND_FLOAT}
    if a in numeric and b in numeric:
        return KIND_FLOAT
    return KIND_TEXT


def infer_column_schema(name: str, cells: Sequence[Optional[str]]) -> ColumnSchema:
    """Infer the narrowest kind consistent with every non-missing cell.

    Lattice: boolean and integer/float sit under text; mixing integer with
    float widens to float, anything else widens to text.
    """
    kind = None
    missing = 0
    for c in cells:
        if c is None:
            missing += 1
            continue
        k = _cell_kind(c)
        kind = k if kind is None else _join_kinds(kind, k)
    return ColumnSchema(name=name, kind=kind if kind is not None else KIND_TEXT, missing_count=missing)


def _normalize_header(names: list[str]) -> list[str]:
    out = []
    for i, n in enumerate(names):
        out.append(n if n != "" else f"Unnamed: {i}")
    dupes = {n for n in out if out.count(n) > 1}
    if dupes:
        raise IngestError(f"duplicate column names: {sorted(dupes)}")
    return out


def resolve_column(name: str, columns: Sequence[str]) -> str:
    """Resolve a column reference, exact first, then separator/case-insensitively.

    Raises when nothing matches or the normalized form is ambiguous.
    """
    if name in columns:
        return name
    want = normalize_name_key(name)
    hits = [c for c in columns if normalize_name_key(c) == want]
    if len(hits) == 1:
        return hits[0]
    if not hits:
        raise IngestError(f"column {name!r} not found among {list(columns)}")
    raise IngestError(f"column {name!r} is ambiguous: matches {hits}")


def normalize_name_key(name: str) -> str:
    """Lowercased, separator-collapsed key used for column matching."""
    return " ".join(name.replace("_", " ").replace("-", " ").lower().split())


def load_dataset(
    path: str | Path,
    dataset_id: str,
    target_hint: Optional[str] = None,
    raw_metadata: str = "",
) -> Dataset:
    """Load a header-first CSV into a Dataset; empty cells become missing."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise IngestError(f"cannot read {path}: {e}") from e
    reader = csv.reader(text.splitlines())
    try:
        header = next(reader)
    except StopIteration:
        raise IngestError(f"{path}: empty file") from None
    names = _normalize_header(header)
    rows: list[Row] = []
    for lineno, rec in enumerate(reader, start=2):
        if len(rec) != len(names):
            raise IngestError(
                f"{path}: row {lineno} has {len(rec)} cells, header has {len(names)}"
            )
        rows.append(tuple(c if c != "" else None for c in rec))
    if not rows:
        raise IngestError(f"{path}: no data rows")
    columns = [
        infer_column_schema(name, [r[j] for r in rows]) for j, name in enumerate(names)
    ]
    target = resolve_column(target_hint, names) if target_hint else None
    return Dataset(
        id=dataset_id,
        raw_metadata=raw_metadata,
        columns=columns,
        rows=rows,
        target_column=target,
    )


def apply_cutoff(d: Dataset, max_rows: int, seed: int) -> Dataset:
    """Uniform subsample (without replacement) to max_rows, original order kept."""
    if max_rows < 1:
        raise IngestError("max_rows must be >= 1")
    n = len(d.rows)
    if n <= max_rows:
        return d
    rng = np.random.default_rng(seed)
    sel = np.sort(rng.choice(n, size=max_rows, replace=False))
    return _take(d, sel)


def _take(d: Dataset, indices: np.ndarray) -> Dataset:
    rows = [d.rows[i] for i in indices]
    row_ids = [d.row_ids[i] for i in indices]
    columns = [
        replace(c, missing_count=sum(1 for r in rows if r[j] is None))
        for j, c in enumerate(d.columns)
    ]
    return Dataset(
        id=d.id,
        raw_metadata=d.raw_metadata,
        columns=columns,
        rows=rows,
        target_column=d.target_column,
        row_ids=row_ids,
    )


def split(d: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Disjoint train/test partition; row order inside each part is original order."""
    n = len(d.rows)
    if n < 2:
        raise IngestError("need at least 2 rows to split")
    n_train = int(np.floor(spec.train_ratio * n + 0.5))  # half-up
    n_train = min(max(n_train, 1), n - 1)
    rng = np.random.default_rng(spec.seed)
    perm = rng.permutation(n)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    return _take(d, train_idx), _take(d, test_idx)


def detect_target_kind(d: Dataset) -> TargetKind:
    """Discrete for text/boolean targets and small-cardinality integer targets,
    continuous for floats and high-cardinality integers."""
    if d.target_column is None:
        raise IngestError("target_column is not set")
    j = d.column_index(d.target_column)
    schema = d.columns[j]
    values = [r[j] for r in d.rows if r[j] is not None]
    if not values:
        raise IngestError(f"target column {d.target_column!r} is entirely missing")
    if schema.kind in (KIND_TEXT, KIND_BOOLEAN):
        labels = _first_appearance(values)
        _check_discrete(labels)
        return TargetKind(variant="discrete", labels=tuple(labels))
    if schema.kind == KIND_INTEGER:
        labels = _first_appearance(values)
        if len(labels) <= DISCRETE_MAX_DISTINCT:
            _check_discrete(labels)
            return TargetKind(variant="discrete", labels=tuple(labels))
    nums = [float(v) for v in values]
    lo, hi = min(nums), max(nums)
    if not lo < hi:
        raise IngestError(f"target column {d.target_column!r} is constant")
    return TargetKind(variant="continuous", minimum=lo, maximum=hi)


def _first_appearance(values):
    seen: dict = {}
    for v in values:
        if v not in seen:
            seen[v] = None
    return list(seen)


def _check_discrete(labels):
    if len(labels) < 2:
        raise IngestError("discrete target needs at least 2 distinct labels")


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    path: str
    target_column: Optional[str] = None
    metadata_path: Optional[str] = None


def load_manifest(path: str | Path) -> list[ManifestEntry]:
    """Manifest: JSON document, {"datasets": [{id, path, target_column?, metadata_path?}]}
    (a bare list is accepted too). Relative paths resolve against the manifest dir.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise IngestError(f"cannot read manifest {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise IngestError(f"manifest {path} is not valid JSON: {e}") from e
    entries = doc["datasets"] if isinstance(doc, dict) else doc
    out = []
    seen = set()
    for e in entries:
        if "id" not in e or "path" not in e:
            raise IngestError(f"manifest entry missing id/path: {e}")
        if e["id"] in seen:
            raise IngestError(f"duplicate dataset id {e['id']!r} in manifest")
        seen.add(e["id"])
        out.append(
            ManifestEntry(
                id=e["id"],
                path=str(path.parent / e["path"]),
                target_column=e.get("target_column"),
                metadata_path=str(path.parent / e["metadata_path"]) if e.get("metadata_path") else None,
            )
        )
    return out


def load_from_manifest(entry: ManifestEntry) -> Dataset:
    raw_meta = ""
    if entry.metadata_path:
        raw_meta = Path(entry.metadata_path).read_text(encoding="utf-8")
    return load_dataset(entry.path, entry.id, target_hint=entry.target_column, raw_metadata=raw_meta)
