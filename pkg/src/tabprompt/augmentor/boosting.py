"""Gradient-boosted regression trees with a softmax objective.

One tree per class per round, exact greedy splits, Newton-style leaf values
gamma = sum(residual) / (sum(hessian) + lam) with lam = 1. The fitted raw
ensemble is wrapped with per-class isotonic calibrators trained on 3-fold
out-of-fold probabilities, then renormalized, to give honest confidence
estimates without disturbing the decision function much.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .. import kernels
from .encoding import OrdinalEncoder
from .isotonic import IsotonicFit, fit_isotonic

MODEL_SCHEMA_TAG = "tabprompt-model/1"

DEFAULT_ROUNDS = 100
DEFAULT_MAX_DEPTH = 6
DEFAULT_LEARNING_RATE = 0.3
DEFAULT_LAMBDA = 1.0

CALIBRATION_FOLDS = 3


@dataclass
class RegressionTree:
    feature: np.ndarray  # int64, -1 at leaves
    threshold: np.ndarray  # float64
    left: np.ndarray  # int64
    right: np.ndarray  # int64
    value: np.ndarray  # float64, leaf gamma

    def add_predictions(self, X: np.ndarray, out: np.ndarray) -> None:
        kernels.predict_tree(
            self.feature, self.threshold, self.left, self.right, self.value, X, out
        )

    def to_json(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "RegressionTree":
        return cls(
            feature=np.asarray(doc["feature"], dtype=np.int64),
            threshold=np.asarray(doc["threshold"], dtype=np.float64),
            left=np.asarray(doc["left"], dtype=np.int64),
            right=np.asarray(doc["right"], dtype=np.int64),
            value=np.asarray(doc["value"], dtype=np.float64),
        )


def _fit_tree(
    X: np.ndarray, resid: np.ndarray, hess: np.ndarray, max_depth: int, lam: float
) -> RegressionTree:
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def grow(idx: np.ndarray, depth: int) -> int:
        node = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        r = resid[idx]
        h = hess[idx]
        if depth < max_depth and idx.size >= 2:
            best_gain = -np.inf
            best_j = -1
            best_thr = 0.0
            for j in range(X.shape[1]):
                xs = X[idx, j]
                order = np.argsort(xs, kind="stable")
                g, p = kernels.scan_split(
                    np.ascontiguousarray(xs[order]),
                    np.ascontiguousarray(r[order]),
                    np.ascontiguousarray(h[order]),
                    lam,
                )
                if p >= 0 and g > best_gain:
                    xs_s = xs[order]
                    best_gain = g
                    best_j = j
                    best_thr = 0.5 * (xs_s[p] + xs_s[p + 1])
            # any boundary is accepted (gain picks where, not whether):
            # symmetric patterns like parity score ~0 gain at the root, and
            # cancellation noise makes a sign gate reject them
            if best_j >= 0:
                mask = X[idx, best_j] < best_thr
                # midpoint can collapse onto a sample value in float; skip then
                if mask.any() and not mask.all():
                    feature[node] = best_j
                    threshold[node] = best_thr
                    left[node] = grow(idx[mask], depth + 1)
                    right[node] = grow(idx[~mask], depth + 1)
                    return node
        value[node] = float(np.sum(r) / (np.sum(h) + lam))
        return node

    grow(np.arange(X.shape[0], dtype=np.int64), 0)
    return RegressionTree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        value=np.asarray(value, dtype=np.float64),
    )


def _softmax(F: np.ndarray) -> np.ndarray:
    z = F - F.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _log_loss(P: np.ndarray, y: np.ndarray) -> float:
    eps = 1e-12
    return float(-np.mean(np.log(np.clip(P[np.arange(len(y)), y], eps, None))))


@dataclass
class GradientBoostedTrees:
    n_classes: int
    learning_rate: float = DEFAULT_LEARNING_RATE
    trees: list[list[RegressionTree]] = field(default_factory=list)  # [round][class]
    loss_history: list[float] = field(default_factory=list)

    def fit(
        self,
        X: np.ndarray,
        y: np.ndarray,
        rounds: int = DEFAULT_ROUNDS,
        max_depth: int = DEFAULT_MAX_DEPTH,
        lam: float = DEFAULT_LAMBDA,
    ) -> "GradientBoostedTrees":
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        if X.size == 0:
            raise ValueError("empty feature matrix")
        if self.n_classes < 2:
            raise ValueError("need a class space with >= 2 classes")
        if y.min() < 0 or y.max() >= self.n_classes:
            raise ValueError("class index out of range")
        n = X.shape[0]
        onehot = np.zeros((n, self.n_classes), dtype=np.float64)
        onehot[np.arange(n), y] = 1.0
        F = np.zeros((n, self.n_classes), dtype=np.float64)
        self.trees = []
        self.loss_history = []
        for _ in range(rounds):
            P = _softmax(F)
            round_trees = []
            for c in range(self.n_classes):
                resid = np.ascontiguousarray(onehot[:, c] - P[:, c])
                hess = np.ascontiguousarray(P[:, c] * (1.0 - P[:, c]))
                tree = _fit_tree(X, resid, hess, max_depth, lam)
                round_trees.append(tree)
                pred = np.zeros(n, dtype=np.float64)
                tree.add_predictions(X, pred)
                F[:, c] += self.learning_rate * pred
            self.trees.append(round_trees)
            self.loss_history.append(_log_loss(_softmax(F), y))
        return self

    def raw_scores(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        F = np.zeros((X.shape[0], self.n_classes), dtype=np.float64)
        for round_trees in self.trees:
            for c, tree in enumerate(round_trees):
                pred = np.zeros(X.shape[0], dtype=np.float64)
                tree.add_predictions(X, pred)
                F[:, c] += self.learning_rate * pred
        return F

    def predict_proba_raw(self, X: np.ndarray) -> np.ndarray:
        return _softmax(self.raw_scores(X))

    def to_json(self) -> dict:
        return {
            "n_classes": self.n_classes,
            "learning_rate": self.learning_rate,
            "trees": [[t.to_json() for t in row] for row in self.trees],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "GradientBoostedTrees":
        out = cls(n_classes=int(doc["n_classes"]), learning_rate=float(doc["learning_rate"]))
        out.trees = [[RegressionTree.from_json(t) for t in row] for row in doc["trees"]]
        return out


@dataclass
class TreeEnsembleModel:
    """Calibrated ensemble: raw booster + per-class isotonic calibrators.

    The encoder and target space ride along so a persisted model is enough to
    score raw dataset rows.
    """

    booster: GradientBoostedTrees
    calibrators: list[IsotonicFit]
    encoder: Optional[OrdinalEncoder] = None
    space: Optional[object] = None  # TargetSpace; kept loose to avoid an import cycle

    @property
    def n_classes(self) -> int:
        return self.booster.n_classes

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        raw = self.booster.predict_proba_raw(X)
        cal = np.empty_like(raw)
        for c, iso in enumerate(self.calibrators):
            cal[:, c] = iso.predict(raw[:, c])
        total = cal.sum(axis=1, keepdims=True)
        # all-zero calibrated rows carry no signal; keep the raw distribution
        dead = total[:, 0] <= 1e-12
        safe = np.where(total <= 1e-12, 1.0, total)
        out = cal / safe
        if dead.any():
            out[dead] = raw[dead]
        return out

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)

    def to_json(self) -> dict:
        doc = {
            "schema": MODEL_SCHEMA_TAG,
            "booster": self.booster.to_json(),
            "calibrators": [
                {"breakpoints": c.breakpoints.tolist(), "values": c.values.tolist()}
                for c in self.calibrators
            ],
        }
        if self.encoder is not None:
            doc["encoder"] = self.encoder.to_json()
        if self.space is not None:
            doc["space"] = self.space.to_json()
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "TreeEnsembleModel":
        if doc.get("schema") != MODEL_SCHEMA_TAG:
            raise ValueError(f"unsupported model schema: {doc.get('schema')!r}")
        from .targets import TargetSpace

        return cls(
            booster=GradientBoostedTrees.from_json(doc["booster"]),
            calibrators=[
                IsotonicFit(
                    breakpoints=np.asarray(c["breakpoints"], dtype=np.float64),
                    values=np.asarray(c["values"], dtype=np.float64),
                )
                for c in doc["calibrators"]
            ],
            encoder=OrdinalEncoder.from_json(doc["encoder"]) if "encoder" in doc else None,
            space=TargetSpace.from_json(doc["space"]) if "space" in doc else None,
        )


def fit_external_predictor(
    X: np.ndarray,
    y: Sequence[int],
    n_classes: int,
    rounds: int = DEFAULT_ROUNDS,
    max_depth: int = DEFAULT_MAX_DEPTH,
    lr: float = DEFAULT_LEARNING_RATE,
    lam: float = DEFAULT_LAMBDA,
) -> TreeEnsembleModel:
    """Fit the calibrated ensemble used to estimate per-class confidences.

    Calibrators are trained on out-of-fold probabilities (3 round-robin
    folds), then the booster itself is refit on all rows.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] < 10:
        raise ValueError("need at least 10 training rows")
    if n_classes < 2:
        raise ValueError("need a class space with >= 2 classes")
    n = X.shape[0]
    folds = np.arange(n) % CALIBRATION_FOLDS
    oof = np.zeros((n, n_classes), dtype=np.float64)
    for f in range(CALIBRATION_FOLDS):
        hold = folds == f
        gbt = GradientBoostedTrees(n_classes=n_classes, learning_rate=lr)
        gbt.fit(X[~hold], y[~hold], rounds=rounds, max_depth=max_depth, lam=lam)
        oof[hold] = gbt.predict_proba_raw(X[hold])
    calibrators = [
        fit_isotonic(oof[:, c], (y == c).astype(np.float64)) for c in range(n_classes)
    ]
    booster = GradientBoostedTrees(n_classes=n_classes, learning_rate=lr)
    booster.fit(X, y, rounds=rounds, max_depth=max_depth, lam=lam)
    return TreeEnsembleModel(booster=booster, calibrators=calibrators)
