"""Parse generated text back into a probability vector and a class pick.

The extraction regex takes every decimal with a digit after the dot, in
order. A generation is ok only when the count matches the class space
exactly; fewer numbers means the output was cut off (truncated), more means
the model rambled past its answer (failed), as does an empty extraction.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

PROB_PATTERN = re.compile(r"[0-9]*[.][0-9]+")

STATUS_OK = "ok"
STATUS_TRUNCATED = "truncated"
STATUS_FAILED = "failed"


@dataclass(frozen=True)
class ParsedPrediction:
    probs: tuple[float, ...]
    predicted_class: Optional[int]
    parse_status: str

    @property
    def is_ok(self) -> bool:
        return self.parse_status == STATUS_OK


def extract_probs(text: str) -> list[float]:
    """Every decimal-with-fraction substring, in order of occurrence."""
    return [float(m) for m in PROB_PATTERN.findall(text)]


def _first_max_index(probs) -> int:
    best = 0
    for i in range(1, len(probs)):
        if probs[i] > probs[best]:
            best = i
    return best


def map_to_class(probs, expected: int) -> ParsedPrediction:
    """Classify an extracted vector against the expected class count."""
    if expected < 1:
        raise ValueError("expected class count must be >= 1")
    probs = tuple(float(p) for p in probs)
    if len(probs) == expected:
        return ParsedPrediction(probs, _first_max_index(probs), STATUS_OK)
    if 0 < len(probs) < expected:
        return ParsedPrediction(probs, _first_max_index(probs), STATUS_TRUNCATED)
    return ParsedPrediction(probs, None, STATUS_FAILED)


def parse_generation(text: str, expected: int) -> ParsedPrediction:
    return map_to_class(extract_probs(text), expected)
