"""Elementwise activations and the classification loss."""

import numpy as np

from ..errors import ShapeError

# Floor applied to probabilities before taking the log.
PROB_FLOOR = 1e-12


def sigmoid(x):
    """Logistic function, evaluated without overflow for large |x|."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def tanh_act(x):
    return np.tanh(np.asarray(x, dtype=np.float64))


def relu(x):
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def softmax(logits):
    """Softmax over the last axis. Shifting by the row max keeps it stable."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(probabilities, label):
    """Negative log-probability of ``label`` with the probability clamped at 1e-12."""
    p = np.asarray(probabilities, dtype=np.float64).ravel()
    label = int(label)
    if not 0 <= label < p.size:
        raise ShapeError(f"label {label} out of range for {p.size} classes")
    return float(-np.log(max(p[label], PROB_FLOOR)))


def cross_entropy_grad(probabilities, labels):
    """Gradient of the mean batch cross entropy with respect to the probabilities.

    ``probabilities`` has shape (N, K). Entries whose probability sits below the
    clamp floor get zero gradient, matching the clamped forward value.
    """
    p = np.asarray(probabilities, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n = p.shape[0]
    grad = np.zeros_like(p)
    picked = p[np.arange(n), labels]
    live = picked > PROB_FLOOR
    grad[np.arange(n)[live], labels[live]] = -1.0 / (picked[live] * n)
    return grad


def batch_cross_entropy(probabilities, labels):
    p = np.asarray(probabilities, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= p.shape[1]):
        raise ShapeError(f"labels out of range for {p.shape[1]} classes")
    picked = np.maximum(p[np.arange(p.shape[0]), labels], PROB_FLOOR)
    return float(-np.log(picked).mean())
