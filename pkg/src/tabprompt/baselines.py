"""Non-generative comparison model: a one-hidden-layer MLP classifier.

Softmax cross-entropy, rectified-linear hidden layer, full-batch adaptive-
moment updates (decay 0.9/0.999, epsilon 1e-8). Features are standardized
per column; constant columns keep scale 1 so they pass through untouched.
The tree-ensemble comparison model lives in augmentor and is reused as-is.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

MLP_SCHEMA_TAG = "tabprompt-mlp/1"

DEFAULT_LR = 1e-3
DEFAULT_HIDDEN = 100
DEFAULT_EPOCHS = 100
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class MlpModel:
    W1: np.ndarray  # (features, hidden)
    b1: np.ndarray  # (hidden,)
    W2: np.ndarray  # (hidden, classes)
    b2: np.ndarray  # (classes,)
    mean: np.ndarray  # per-column standardization
    scale: np.ndarray  # per-column; 1.0 where the column was constant
    loss_history: list[float] = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return self.W1.shape[0]

    @property
    def n_classes(self) -> int:
        return self.W2.shape[1]

    def to_json(self) -> dict:
        return {
            "schema": MLP_SCHEMA_TAG,
            "W1": self.W1.tolist(),
            "b1": self.b1.tolist(),
            "W2": self.W2.tolist(),
            "b2": self.b2.tolist(),
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "MlpModel":
        if doc.get("schema") != MLP_SCHEMA_TAG:
            raise ValueError(f"unsupported model schema: {doc.get('schema')!r}")
        return cls(
            W1=np.asarray(doc["W1"], dtype=np.float64),
            b1=np.asarray(doc["b1"], dtype=np.float64),
            W2=np.asarray(doc["W2"], dtype=np.float64),
            b2=np.asarray(doc["b2"], dtype=np.float64),
            mean=np.asarray(doc["mean"], dtype=np.float64),
            scale=np.asarray(doc["scale"], dtype=np.float64),
        )


def _softmax(Z: np.ndarray) -> np.ndarray:
    z = Z - Z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _forward_backward(
    W1: np.ndarray,
    b1: np.ndarray,
    W2: np.ndarray,
    b2: np.ndarray,
    Xs: np.ndarray,
    y: np.ndarray,
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean cross-entropy and its gradients on standardized inputs."""
    n = Xs.shape[0]
    H = Xs @ W1 + b1
    A = np.maximum(H, 0.0)
    Z = A @ W2 + b2
    P = _softmax(Z)
    eps = 1e-12
    loss = float(-np.mean(np.log(np.clip(P[np.arange(n), y], eps, None))))
    dZ = P.copy()
    dZ[np.arange(n), y] -= 1.0
    dZ /= n
    grads = {
        "W2": A.T @ dZ,
        "b2": dZ.sum(axis=0),
    }
    dA = dZ @ W2.T
    dH = dA * (H > 0.0)
    grads["W1"] = Xs.T @ dH
    grads["b1"] = dH.sum(axis=0)
    return loss, grads


def fit_mlp(
    X: np.ndarray,
    y: Sequence[int],
    lr: float = DEFAULT_LR,
    hidden: int = DEFAULT_HIDDEN,
    epochs: int = DEFAULT_EPOCHS,
    seed: int = 0,
) -> MlpModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need a 2-d matrix with at least 2 samples")
    if not np.all(np.isfinite(X)):
        raise ValueError("features must be finite")
    classes = int(y.max()) + 1
    if len(np.unique(y)) < 2:
        raise ValueError("need at least 2 classes in y")

    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale > 0.0, scale, 1.0)
    Xs = (X - mean) / scale

    rng = np.random.default_rng(seed)
    d = X.shape[1]
    W1 = rng.normal(0.0, np.sqrt(2.0 / d), size=(d, hidden))
    b1 = np.zeros(hidden)
    W2 = rng.normal(0.0, np.sqrt(2.0 / hidden), size=(hidden, classes))
    b2 = np.zeros(classes)

    params = {"W1": W1, "b1": b1, "W2": W2, "b2": b2}
    m = {k: np.zeros_like(v) for k, v in params.items()}
    v = {k: np.zeros_like(v_) for k, v_ in params.items()}
    history = []
    for t in range(1, epochs + 1):
        loss, grads = _forward_backward(
            params["W1"], params["b1"], params["W2"], params["b2"], Xs, y
        )
        history.append(loss)
        for k in params:
            g = grads[k]
            m[k] = ADAM_BETA1 * m[k] + (1.0 - ADAM_BETA1) * g
            v[k] = ADAM_BETA2 * v[k] + (1.0 - ADAM_BETA2) * g * g
            mhat = m[k] / (1.0 - ADAM_BETA1**t)
            vhat = v[k] / (1.0 - ADAM_BETA2**t)
            params[k] = params[k] - lr * mhat / (np.sqrt(vhat) + ADAM_EPS)

    return MlpModel(
        W1=params["W1"],
        b1=params["b1"],
        W2=params["W2"],
        b2=params["b2"],
        mean=mean,
        scale=scale,
        loss_history=history,
    )


def predict_proba_mlp(model: MlpModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(
            f"feature arity mismatch: model expects {model.n_features}, got {X.shape}"
        )
    Xs = (X - model.mean) / model.scale
    A = np.maximum(Xs @ model.W1 + model.b1, 0.0)
    return _softmax(A @ model.W2 + model.b2)


def predict_mlp(model: MlpModel, X: np.ndarray) -> np.ndarray:
    return np.argmax(predict_proba_mlp(model, X), axis=1)
