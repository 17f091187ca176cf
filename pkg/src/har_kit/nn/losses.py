"""Classification losses returning (scalar, gradient w.r.t. logits)."""

from __future__ import annotations

import numpy as np


def cross_entropy_loss(logits: np.ndarray, labels: np.ndarray):
    """Mean softmax cross-entropy with max-subtraction stabilization.

    logits: [n, C]; labels: [n] ints in [0, C).  Returns the scalar loss
    and dloss/dlogits (already divided by the batch size).
    """
    logits = np.asarray(logits)
    labels = np.asarray(labels, dtype=np.int64)
    if logits.ndim != 2 or labels.shape != (len(logits),):
        raise ValueError("cross_entropy_loss expects [n, C] logits and [n] labels")
    n, c = logits.shape
    if len(labels) and (labels.min() < 0 or labels.max() >= c):
        raise ValueError(f"labels outside [0, {c})")

    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    total = exp.sum(axis=1, keepdims=True)
    log_probs = shifted - np.log(total)
    loss = float(-log_probs[np.arange(n), labels].mean())

    grad = exp / total
    grad[np.arange(n), labels] -= 1.0
    grad /= n
    return loss, grad.astype(logits.dtype)


def bce_with_logits_loss(logits: np.ndarray, targets: np.ndarray):
    """Mean binary cross-entropy on raw scores.

    logits, targets: [n]; targets in {0, 1} (floats allowed).  Uses the
    softplus form, stable for large |logits|.
    """
    logits = np.asarray(logits, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if logits.shape != targets.shape or logits.ndim != 1:
        raise ValueError("bce_with_logits_loss expects matching 1-D arrays")
    n = len(logits)
    # log(1 + exp(-|z|)) + max(z, 0) - z*y
    loss = float(
        (np.logaddexp(0.0, -np.abs(logits)) + np.maximum(logits, 0.0)
         - logits * targets).mean()
    )
    sigmoid = 1.0 / (1.0 + np.exp(-logits))
    grad = (sigmoid - targets) / n
    return loss, grad
