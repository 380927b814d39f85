"""Hot numeric kernels for the boosted-tree learner.

Two interchangeable implementations of each kernel: a numba ``@njit`` version
and a pure-numpy fallback. Selection is driven by the ``TABPROMPT_NUMBA``
environment variable, read once at import:

* ``TABPROMPT_NUMBA=0`` -- force the numpy path
* ``TABPROMPT_NUMBA=1`` -- require numba (ImportError if unavailable)
* unset               -- use numba when importable, numpy otherwise

Both paths perform the identical sequence of double-precision additions
(prefix sums run left to right), so they produce bitwise-identical split
decisions; ``tests/test_kernels.py`` locks that in.
"""

from __future__ import annotations

import os

import numpy as np

_ENV_FLAG = os.environ.get("TABPROMPT_NUMBA", "").strip()

if _ENV_FLAG == "0":
    _HAVE_NUMBA = False
else:
    try:
        from numba import njit

        _HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a hard dep, but stay import-safe
        if _ENV_FLAG == "1":
            raise
        _HAVE_NUMBA = False


def use_numba() -> bool:
    """True when the numba kernel path is active."""
    return _HAVE_NUMBA


def _scan_split_py(xs, resid, hess, lam):
    """Best split of one feature, values presorted ascending.

    Gain is the exact-greedy second-order objective reduction
    0.5 * (RL^2/(HL+lam) + RR^2/(HR+lam) - R^2/(H+lam)) with R the residual
    (y - p) sums. Returns (gain, pos) for the first boundary attaining the
    maximum gain, where the split separates positions [0..pos] from
    [pos+1..]; pos = -1 when the feature has no boundary at all. The caller
    decides whether the gain is worth splitting on (zero-gain splits are
    accepted so symmetric patterns like parity still partition).
    """
    n = xs.shape[0]
    r_tot = 0.0
    h_tot = 0.0
    for i in range(n):
        r_tot += resid[i]
        h_tot += hess[i]
    parent = r_tot * r_tot / (h_tot + lam)
    best_gain = -np.inf
    best_pos = -1
    rl = 0.0
    hl = 0.0
    for i in range(n - 1):
        rl += resid[i]
        hl += hess[i]
        if xs[i + 1] <= xs[i]:
            continue
        rr = r_tot - rl
        hr = h_tot - hl
        gain = 0.5 * (rl * rl / (hl + lam) + rr * rr / (hr + lam) - parent)
        if gain > best_gain:
            best_gain = gain
            best_pos = i
    return best_gain, best_pos


def _scan_split_np(xs, resid, hess, lam):
    n = xs.shape[0]
    if n < 2:
        return -np.inf, -1
    cr = np.cumsum(resid)
    ch = np.cumsum(hess)
    r_tot = cr[-1]
    h_tot = ch[-1]
    parent = r_tot * r_tot / (h_tot + lam)
    rl = cr[:-1]
    hl = ch[:-1]
    rr = r_tot - rl
    hr = h_tot - hl
    gain = 0.5 * (rl * rl / (hl + lam) + rr * rr / (hr + lam) - parent)
    gain = np.where(xs[1:] > xs[:-1], gain, -np.inf)
    pos = int(np.argmax(gain))
    if np.isfinite(gain[pos]):
        return float(gain[pos]), pos
    return -np.inf, -1


def _predict_tree_py(feature, threshold, left, right, value, X, out):
    n = X.shape[0]
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] < threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] += value[node]


def _predict_tree_np(feature, threshold, left, right, value, X, out):
    n = X.shape[0]
    node = np.zeros(n, dtype=np.int64)
    while True:
        f = feature[node]
        live = f >= 0
        if not live.any():
            break
        idx = np.nonzero(live)[0]
        cur = node[idx]
        go_left = X[idx, f[idx]] < threshold[cur]
        node[idx] = np.where(go_left, left[cur], right[cur])
    out += value[node]


# explicit handles for the benchmark / equivalence tests
scan_split_numpy = _scan_split_np
predict_tree_numpy = _predict_tree_np

if _HAVE_NUMBA:
    scan_split_numba = njit(cache=True)(_scan_split_py)
    predict_tree_numba = njit(cache=True)(_predict_tree_py)
    scan_split = scan_split_numba
    predict_tree = predict_tree_numba
else:
    scan_split_numba = None
    predict_tree_numba = None
    scan_split = _scan_split_np
    predict_tree = _predict_tree_np
