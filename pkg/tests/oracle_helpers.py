"""Independent reference implementations used as test oracles.

Everything here recomputes expected values by a different route than the
package code: closed-form formulas, exhaustive enumeration, or brute
force. Keep these free of tabprompt imports so a bug cannot leak into
its own oracle.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def brute_force_split(xs, resid, hess, lam):
    """Exhaustive best-split search, independent accumulation order.

    Mirrors the documented objective: gain over every boundary between
    distinct adjacent sorted values, first max wins. Returns
    (gain, boundary_index) or (-inf, -1) when no boundary exists.
    """
    xs = list(xs)
    n = len(xs)
    total_r = math.fsum(resid)
    total_h = math.fsum(hess)
    parent = total_r * total_r / (total_h + lam)
    best_gain, best_pos = -math.inf, -1
    for p in range(n - 1):
        if not xs[p + 1] > xs[p]:
            continue
        rl = math.fsum(resid[: p + 1])
        hl = math.fsum(hess[: p + 1])
        rr = total_r - rl
        hr = total_h - hl
        gain = 0.5 * (rl * rl / (hl + lam) + rr * rr / (hr + lam) - parent)
        if gain > best_gain:
            best_gain, best_pos = gain, p
    return best_gain, best_pos


def isotonic_minmax(y, w=None):
    """Isotonic L2 fit via the max-min formula (not PAVA).

    fit[i] = max over j<=i of (min over k>=i of weighted mean y[j..k]).
    O(n^3) but exact; a completely different algorithm from the
    pool-adjacent-violators implementation under test.
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    w = np.ones(n) if w is None else np.asarray(w, dtype=float)
    out = np.empty(n)
    for i in range(n):
        best = -math.inf
        for j in range(i + 1):
            worst = math.inf
            for k in range(i, n):
                seg_w = w[j : k + 1]
                worst = min(worst, float(np.dot(seg_w, y[j : k + 1]) / seg_w.sum()))
            best = max(best, worst)
        out[i] = best
    return out


def isotonic_minmax_batch(Y):
    """Vectorized max-min isotonic fit for a batch of unit-weight rows.

    Y has shape (batch, n). Returns the (batch, n) fits. Used to sweep
    every instance of small n exhaustively in reasonable time.
    """
    Y = np.asarray(Y, dtype=float)
    b, n = Y.shape
    prefix = np.zeros((b, n + 1))
    np.cumsum(Y, axis=1, out=prefix[:, 1:])
    # avg[:, j, k] = mean of y[j..k] for j <= k, +inf elsewhere
    j_idx = np.arange(n)[:, None]
    k_idx = np.arange(n)[None, :]
    length = k_idx - j_idx + 1
    seg = prefix[:, k_idx + 1] - prefix[:, j_idx]
    with np.errstate(divide="ignore", invalid="ignore"):
        avg = np.where(length > 0, seg / np.maximum(length, 1), np.inf)
    out = np.empty((b, n))
    for i in range(n):
        # min over k >= i, then max over j <= i
        inner = avg[:, : i + 1, i:].min(axis=2)
        out[:, i] = inner.max(axis=1)
    return out


def rank_by_counting(values):
    """Average-tie descending ranks by pairwise counting (1-based)."""
    vals = list(values)
    ranks = []
    for i, v in enumerate(vals):
        greater = sum(1 for u in vals if u > v)
        equal = sum(1 for j, u in enumerate(vals) if u == v and j != i)
        ranks.append(1.0 + greater + equal / 2.0)
    return ranks


def quartiles_by_hand(values):
    """Linear-interpolation quartiles, textbook formula.

    position = q * (n - 1); value = v[floor] + frac * (v[floor+1] - v[floor]).
    """
    v = sorted(values)
    n = len(v)
    out = []
    for q in (0.25, 0.5, 0.75):
        pos = q * (n - 1)
        lo = int(math.floor(pos))
        hi = min(lo + 1, n - 1)
        frac = pos - lo
        out.append(v[lo] + frac * (v[hi] - v[lo]))
    return tuple(out)


def scan_floats_dfa(text):
    """Character-level scanner for the float grammar: digits* '.' digits+.

    Independent of the regex under test. Longest match, left to right.
    """
    out = []
    i, n = 0, len(text)
    while i < n:
        j = i
        while j < n and text[j].isdigit() and text[j].isascii():
            j += 1
        if j < n and text[j] == ".":
            k = j + 1
            while k < n and text[k].isdigit() and text[k].isascii():
                k += 1
            if k > j + 1:
                out.append(float(text[i:k]))
                i = k
                continue
        i = i + 1 if j == i else j
    return out


def logistic_fit_predict(X_train, y_train, X_test, steps=2000, lr=0.5):
    """Small binary logistic regression, full-batch gradient descent."""
    mu = X_train.mean(axis=0)
    sd = X_train.std(axis=0)
    sd[sd == 0] = 1.0
    Xt = (X_train - mu) / sd
    Xs = (X_test - mu) / sd
    w = np.zeros(Xt.shape[1])
    b = 0.0
    for _ in range(steps):
        z = Xt @ w + b
        p = 1.0 / (1.0 + np.exp(-z))
        g = p - y_train
        w -= lr * (Xt.T @ g) / len(y_train)
        b -= lr * g.mean()
    return (Xs @ w + b > 0).astype(int)


def enumerate_monotone_partitions(y, w):
    """Best monotone fit by brute force over block partitions.

    Every isotonic solution is piecewise-constant on consecutive blocks
    with nondecreasing block means; enumerate all 2^(n-1) partitions,
    keep feasible ones, return the weighted-least-squares argmin.
    """
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    n = len(y)
    best_fit, best_cost = None, math.inf
    for mask in range(1 << (n - 1)):
        bounds = [0]
        for b in range(n - 1):
            if mask >> b & 1:
                bounds.append(b + 1)
        bounds.append(n)
        means = []
        for a, z in itertools.pairwise(bounds):
            means.append(float(np.dot(w[a:z], y[a:z]) / w[a:z].sum()))
        if any(m2 < m1 for m1, m2 in itertools.pairwise(means)):
            continue
        fit = np.empty(n)
        for (a, z), m in zip(itertools.pairwise(bounds), means):
            fit[a:z] = m
        cost = float(np.dot(w, (fit - y) ** 2))
        if cost < best_cost - 1e-15:
            best_cost, best_fit = cost, fit
    return best_fit
