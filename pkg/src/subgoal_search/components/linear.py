"""Linear models over hashed sparse features, trained with mini-batch AdaGrad."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .features import DIM, SparseFeatures

KINDS = ("multiclass", "regression", "logistic")


@dataclass
class LinearParams:
    epochs: int = 4
    learning_rate: float = 0.2
    batch_size: int = 64
    l2: float = 1e-6
    seed: int = 0


class LinearModel:
    def __init__(self, kind: str, n_outputs: int, dim: int = DIM, seed: int = 0):
        if kind not in KINDS:
            raise ValueError(f"unknown model kind {kind!r}")
        self.kind = kind
        self.dim = dim
        self.n_outputs = n_outputs
        self.seed = seed
        self.weights = np.zeros((dim, n_outputs))
        self.bias = np.zeros(n_outputs)
        self.meta: dict = {}

    def raw(self, f: SparseFeatures) -> np.ndarray:
        idx = np.fromiter(f.indices, dtype=np.int64, count=len(f.indices))
        rows = self.weights[idx]
        if f.values is None:
            return rows.sum(axis=0) + self.bias
        vals = np.fromiter(f.values, dtype=np.float64, count=len(f.values))
        return vals @ rows + self.bias

    def predict(self, f: SparseFeatures):
        z = self.raw(f)
        if self.kind == "regression":
            return float(z[0])
        if self.kind == "logistic":
            return float(_sigmoid(z[0]))
        return z

    def __eq__(self, other):
        return (isinstance(other, LinearModel) and self.kind == other.kind and self.dim == other.dim
                and self.n_outputs == other.n_outputs and self.seed == other.seed
                and np.array_equal(self.bias, other.bias) and np.array_equal(self.weights, other.weights))


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _design_matrix(feats, dim):
    indptr = np.zeros(len(feats) + 1, dtype=np.int64)
    for i, f in enumerate(feats):
        indptr[i + 1] = indptr[i] + len(f.indices)
    indices = np.empty(indptr[-1], dtype=np.int64)
    data = np.ones(indptr[-1])
    for i, f in enumerate(feats):
        a, b = indptr[i], indptr[i + 1]
        indices[a:b] = f.indices
        if f.values is not None:
            data[a:b] = f.values
    if len(indices) and (indices.min() < 0 or indices.max() >= dim):
        raise ValueError("feature index outside the hashed dimension")
    if not np.all(np.isfinite(data)):
        raise ValueError("non-finite feature value")
    cols, inv = np.unique(indices, return_inverse=True)
    x = sparse.csr_matrix((data, inv, indptr), shape=(len(feats), len(cols)))
    return x, cols


def train_linear_model(samples, kind: str, params: LinearParams | None = None,
                       n_classes: int | None = None, dim: int = DIM) -> LinearModel:
    """Fit a linear model on ``(SparseFeatures, target)`` samples.

    multiclass: softmax cross-entropy, integer targets in ``range(n_classes)``.
    regression: squared error.  logistic: log-loss on 0/1 targets.
    Training is mini-batch AdaGrad over a seeded permutation per epoch, so
    identical (samples, params) give identical weights.
    """
    params = params or LinearParams()
    if kind not in KINDS:
        raise ValueError(f"unknown model kind {kind!r}")
    feats = [f for f, _ in samples]
    y = np.asarray([t for _, t in samples], dtype=np.float64)
    if not np.all(np.isfinite(y)):
        raise ValueError("non-finite target")
    if kind == "multiclass":
        if n_classes is None:
            raise ValueError("multiclass training needs n_classes")
        if len(y) and (y.min() < 0 or y.max() >= n_classes or np.any(y != np.round(y))):
            raise ValueError("class targets must be integers in range(n_classes)")
        n_out = n_classes
    else:
        if kind == "logistic" and np.any((y != 0) & (y != 1)):
            raise ValueError("logistic targets must be 0 or 1")
        n_out = 1
    model = LinearModel(kind, n_out, dim, params.seed)
    if not samples:
        return model
    x, cols = _design_matrix(feats, dim)
    w = np.zeros((len(cols), n_out))
    b = np.zeros(n_out)
    gw = np.zeros_like(w)
    gb = np.zeros_like(b)
    eps = 1e-8
    lr = params.learning_rate
    rng = np.random.default_rng(params.seed)
    n = len(samples)
    labels = y.astype(np.int64) if kind == "multiclass" else None
    for _ in range(params.epochs):
        order = rng.permutation(n)
        for start in range(0, n, params.batch_size):
            batch = order[start:start + params.batch_size]
            xb = x[batch]
            z = xb @ w + b
            if kind == "multiclass":
                z -= z.max(axis=1, keepdims=True)
                p = np.exp(z)
                p /= p.sum(axis=1, keepdims=True)
                p[np.arange(len(batch)), labels[batch]] -= 1.0
                err = p
            elif kind == "logistic":
                err = _sigmoid(z) - y[batch, None]
            else:
                err = z - y[batch, None]
            err /= len(batch)
            grad = xb.T @ err
            if params.l2:
                active = np.unique(xb.indices)
                grad[active] += params.l2 * w[active]
            gw += grad * grad
            w -= lr * grad / (np.sqrt(gw) + eps)
            g0 = err.sum(axis=0)
            gb += g0 * g0
            b -= lr * g0 / (np.sqrt(gb) + eps)
    model.weights[cols] = w
    model.bias = b
    model.meta["n_samples"] = n
    return model
