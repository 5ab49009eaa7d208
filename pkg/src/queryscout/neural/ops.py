"""Dense layers, nonlinearities, softmax, and ranking losses.

Everything is float64 numpy with handwritten backward passes; every
backward is finite-difference checked in the test suite. Dense layers use
the (out, in) weight convention with y = x @ W.T + b.
"""

from __future__ import annotations

import numpy as np

from ..errors import ModelError


def glorot(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    """Seeded uniform Glorot initialization."""

    fan_out, fan_in = shape if len(shape) == 2 else (shape[0], shape[0])
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def dense_forward(weight: np.ndarray, bias: np.ndarray, x: np.ndarray) -> np.ndarray:
    """y = x W^T + b. ``x`` may be a vector or a batch of rows."""

    if x.shape[-1] != weight.shape[1]:
        raise ModelError(f"dense input width {x.shape[-1]} != weight fan-in {weight.shape[1]}")
    return x @ weight.T + bias


def dense_backward(
    weight: np.ndarray, x: np.ndarray, dy: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients (dx, dW, db) of y = x W^T + b."""

    if x.ndim == 1:
        dw = np.outer(dy, x)
        db = dy.copy()
        dx = dy @ weight
    else:
        dw = dy.T @ x
        db = dy.sum(axis=0)
        dx = dy @ weight
    return dx, dw, db


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(x: np.ndarray, dy: np.ndarray) -> np.ndarray:
    return dy * (x > 0.0)


def softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - np.max(scores)
    exp = np.exp(shifted)
    return exp / exp.sum()


def log_softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - np.max(scores)
    return shifted - np.log(np.exp(shifted).sum())


def cross_entropy(scores: np.ndarray, target: int) -> tuple[float, np.ndarray]:
    """Softmax cross-entropy; returns (loss, dscores)."""

    probs = softmax(scores)
    loss = -float(log_softmax(scores)[target])
    dscores = probs.copy()
    dscores[target] -= 1.0
    return loss, dscores


def nce_loss(positive: float, negatives: np.ndarray) -> tuple[float, np.ndarray]:
    """Contrastive loss over one positive and m sampled negatives.

    Returns (loss, dscores) where dscores is aligned with the score vector
    [positive, negatives...]. Loss is -log softmax(positive | all).
    """

    negatives = np.asarray(negatives, dtype=np.float64)
    if negatives.size < 1:
        raise ModelError("need at least one negative sample")
    scores = np.concatenate(([positive], negatives))
    return cross_entropy(scores, 0)
