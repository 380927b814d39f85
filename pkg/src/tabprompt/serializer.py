"""Row serialization: one sentence-like listing per row.

Each row renders as "{column} is {value}; ...; {column} is {value}.\n" with
hyphens/underscores in column names replaced by spaces. Values render by the
inferred column kind so the same cell text always serializes the same way:
integer columns keep bare digits, float columns always show a decimal point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .ingest import KIND_FLOAT, KIND_INTEGER, ColumnSchema, Dataset, Row

MISSING_TOKEN = "N/A"


@dataclass(frozen=True)
class SerializationConfig:
    float_precision: int = 6
    min_float_decimals: int = 1
    pair_separator: str = "; "
    terminator: str = ".\n"
    name_separator_replacement: str = " "

    def __post_init__(self):
        if not self.float_precision >= self.min_float_decimals >= 0:
            raise ValueError("need float_precision >= min_float_decimals >= 0")


DEFAULT_CONFIG = SerializationConfig()


def normalize_column_name(name: str, cfg: SerializationConfig = DEFAULT_CONFIG) -> str:
    """Hyphens and underscores become spaces; everything else is untouched."""
    rep = cfg.name_separator_replacement
    return name.replace("-", rep).replace("_", rep)


def format_float(v: float, cfg: SerializationConfig = DEFAULT_CONFIG) -> str:
    """Shortest fixed-point rendering within the precision cap, keeping at
    least min_float_decimals so float columns stay visibly float ("6.0")."""
    s = f"{v:.{cfg.float_precision}f}"
    whole, frac = s.split(".")
    frac = frac.rstrip("0")
    frac = frac.ljust(cfg.min_float_decimals, "0")
    return f"{whole}.{frac}" if frac else whole


def format_prob_cents(cents: int) -> str:
    """Render an integer cent count as a probability string: whole tenths get
    one decimal ("0.3", "0.0", "1.0"), everything else two ("0.05", "0.86")."""
    if not 0 <= cents <= 100:
        raise ValueError(f"cents out of range: {cents}")
    if cents % 10 == 0:
        return f"{cents / 100:.1f}"
    return f"{cents / 100:.2f}"


def render_value(
    cell: Optional[str], schema: ColumnSchema, cfg: SerializationConfig = DEFAULT_CONFIG
) -> str:
    if cell is None:
        return MISSING_TOKEN
    if schema.kind == KIND_FLOAT:
        return format_float(float(cell), cfg)
    if schema.kind == KIND_INTEGER:
        return str(int(cell))
    return cell


def serialize_features(
    row: Row, d: Dataset, cfg: SerializationConfig = DEFAULT_CONFIG
) -> str:
    """Serialize one row over all non-target columns, in schema order."""
    parts = []
    for j, col in enumerate(d.columns):
        if col.name == d.target_column:
            continue
        parts.append(
            f"{normalize_column_name(col.name, cfg)} is {render_value(row[j], col, cfg)}"
        )
    if not parts:
        raise ValueError("row serialized to zero fields")
    return cfg.pair_separator.join(parts) + cfg.terminator


def serialize_all(d: Dataset, cfg: SerializationConfig = DEFAULT_CONFIG) -> list[str]:
    """Feature listings for every row of the dataset."""
    return [serialize_features(r, d, cfg) for r in d.rows]
