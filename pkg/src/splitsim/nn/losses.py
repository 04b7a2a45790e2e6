"""Batch-mean classification losses with their logit gradients."""
from __future__ import annotations

import numpy as np

from ..errors import ConfigError, DataError

SOFTMAX_CE = "softmax-cross-entropy"
SIGMOID_BCE = "sigmoid-binary-cross-entropy"


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def loss_and_grad(kind: str, logits, labels) -> tuple[float, np.ndarray]:
    """Return ``(mean loss, d mean loss / d logits)``."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    n = logits.shape[0]
    if n == 0:
        raise DataError("loss needs a non-empty batch")
    if labels.shape != (n,):
        raise DataError(f"expected {n} labels, got shape {labels.shape}")
    if kind == SOFTMAX_CE:
        classes = logits.shape[1]
        if labels.min() < 0 or labels.max() >= classes:
            raise DataError(f"labels must lie in [0, {classes}), got range [{labels.min()}, {labels.max()}]")
        labels = labels.astype(np.int64)
        z = logits - logits.max(axis=1, keepdims=True)
        log_norm = np.log(np.exp(z).sum(axis=1))
        loss = float(np.mean(log_norm - z[np.arange(n), labels]))
        grad = softmax(logits)
        grad[np.arange(n), labels] -= 1.0
        return loss, grad / n
    if kind == SIGMOID_BCE:
        if not np.all((labels == 0) | (labels == 1)):
            raise DataError("binary labels must be 0 or 1")
        z = logits.reshape(n)
        y = labels.astype(np.float64)
        # log(1 + e^-|z|) form keeps large logits finite
        per = np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))
        grad = (sigmoid(z) - y) / n
        return float(per.mean()), grad.reshape(logits.shape)
    raise ConfigError(f"unknown loss kind {kind!r}")


def predict_scores(kind: str, logits: np.ndarray) -> np.ndarray:
    """Class probabilities; binary models yield a single positive-class column."""
    if kind == SIGMOID_BCE:
        return sigmoid(logits.reshape(-1, 1))
    return softmax(logits)
