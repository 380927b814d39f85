"""Isotonic regression by pool-adjacent-violators, used for calibration.

Fits the nondecreasing step function minimizing weighted squared error.
Fitted values are weighted block means, so they stay inside the convex hull
of the targets; with 0/1 calibration targets that means [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class IsotonicFit:
    breakpoints: np.ndarray  # strictly ascending unique scores
    values: np.ndarray  # nondecreasing fitted values, one per breakpoint

    def predict(self, scores) -> np.ndarray:
        """Stepwise-constant interpolation, clamped at both ends."""
        s = np.asarray(scores, dtype=np.float64)
        idx = np.searchsorted(self.breakpoints, s, side="right") - 1
        idx = np.clip(idx, 0, len(self.breakpoints) - 1)
        return self.values[idx]


def fit_isotonic(scores, targets, weights=None) -> IsotonicFit:
    """Weighted monotone (nondecreasing) least-squares fit of targets on scores.

    Ties in score are pooled up front: the fit must be a function of the
    score, so tied observations collapse into one weighted block.
    """
    s = np.asarray(scores, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if s.size == 0:
        raise ValueError("fit_isotonic needs at least one observation")
    if s.shape != t.shape:
        raise ValueError("scores and targets must have equal length")
    w = np.ones_like(t) if weights is None else np.asarray(weights, dtype=np.float64)
    if w.shape != t.shape:
        raise ValueError("weights must match scores in length")
    if np.any(w <= 0):
        raise ValueError("weights must be positive")

    order = np.argsort(s, kind="stable")
    s, t, w = s[order], t[order], w[order]

    starts = np.concatenate(([0], np.nonzero(np.diff(s))[0] + 1))
    uniq = s[starts]
    gw = np.add.reduceat(w, starts)
    gm = np.add.reduceat(w * t, starts) / gw

    # PAVA: sweep left to right, merging any block whose mean drops
    means: list[float] = []
    wts: list[float] = []
    sizes: list[int] = []
    for m, wt in zip(gm, gw):
        means.append(float(m))
        wts.append(float(wt))
        sizes.append(1)
        while len(means) > 1 and means[-2] > means[-1]:
            m2 = means.pop()
            w2 = wts.pop()
            n2 = sizes.pop()
            means[-1] = (means[-1] * wts[-1] + m2 * w2) / (wts[-1] + w2)
            wts[-1] += w2
            sizes[-1] += n2

    values = np.repeat(np.asarray(means, dtype=np.float64), sizes)
    return IsotonicFit(breakpoints=uniq, values=values)
