"""Benchmark the jit-compiled kernels against the pure-numpy fallbacks.

Runs both implementations of ``scan_split`` and ``predict_tree`` on
identical inputs, checks they agree, and reports wall-clock timings.

Usage::

    python benchmarks/bench_kernels.py [--rows 20000] [--repeats 5]

The jit path needs numba importable; the script reports and exits
nonzero if it is not, since a one-sided benchmark is meaningless.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from tabprompt import kernels
from tabprompt.augmentor import GradientBoostedTrees
from tabprompt.synth import blobs_matrix


def _time(fn, repeats):
    """Best-of-N wall time in seconds; best-of damps scheduler noise."""
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_scan_split(rows, repeats):
    rng = np.random.default_rng(7)
    xs = np.sort(rng.normal(size=rows))
    resid = rng.normal(size=rows)
    hess = rng.uniform(0.01, 0.25, size=rows)
    lam = 1.0

    nb = kernels.scan_split_numba(xs, resid, hess, lam)  # includes jit warmup
    np_ = kernels.scan_split_numpy(xs, resid, hess, lam)
    assert nb == np_, f"kernel mismatch: {nb} vs {np_}"

    t_nb = _time(lambda: kernels.scan_split_numba(xs, resid, hess, lam), repeats)
    t_np = _time(lambda: kernels.scan_split_numpy(xs, resid, hess, lam), repeats)
    return t_nb, t_np


def bench_predict_tree(rows, repeats):
    X, y = blobs_matrix(n=max(rows, 200), seed=7)
    booster = GradientBoostedTrees(n_classes=2).fit(X, y, rounds=5, max_depth=6)
    tree = booster.trees[0][0]
    args = (tree.feature, tree.threshold, tree.left, tree.right, tree.value, X)

    out_nb = np.zeros(len(X))
    out_np = np.zeros(len(X))
    kernels.predict_tree_numba(*args, out_nb)  # jit warmup
    kernels.predict_tree_numpy(*args, out_np)
    assert np.array_equal(out_nb, out_np), "kernel mismatch on predict_tree"

    def run_nb():
        out_nb[:] = 0.0
        kernels.predict_tree_numba(*args, out_nb)

    def run_np():
        out_np[:] = 0.0
        kernels.predict_tree_numpy(*args, out_np)

    return _time(run_nb, repeats), _time(run_np, repeats)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=20000)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args(argv)

    if kernels.scan_split_numba is kernels.scan_split_numpy:
        print("numba is not importable; nothing to compare", file=sys.stderr)
        return 1

    print(f"rows={args.rows} repeats={args.repeats} (best-of timing)")
    print(f"{'kernel':<14} {'numba':>12} {'numpy':>12} {'speedup':>9}")
    for name, fn in (("scan_split", bench_scan_split), ("predict_tree", bench_predict_tree)):
        t_nb, t_np = fn(args.rows, args.repeats)
        print(f"{name:<14} {t_nb * 1e3:>10.3f}ms {t_np * 1e3:>10.3f}ms {t_np / t_nb:>8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
