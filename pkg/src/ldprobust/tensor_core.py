"""Dense numeric helpers: softmax, cross-entropy and KL divergence.

Tensors are plain float64 numpy arrays. Every public function here is pure.
"""

import numpy as np

from .errors import InvalidArgument, NumericError

PROB_FLOOR = 1e-12


def as_real_array(values, name="values"):
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise InvalidArgument(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgument(f"{name} must be finite")
    return arr


def check_finite(arr, what="result"):
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"non-finite values in {what}")
    return arr


def softmax(logits):
    """Row-wise softmax of a vector or a (batch, classes) matrix."""
    z = as_real_array(logits, "logits")
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits):
    z = as_real_array(logits, "logits")
    shifted = z - z.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def cross_entropy(logits, labels):
    """Mean cross-entropy of integer ``labels`` under ``logits`` (batch, classes)."""
    logp = log_softmax(np.atleast_2d(logits))
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if labels.shape[0] != logp.shape[0]:
        raise InvalidArgument("labels and logits disagree on batch size")
    return float(-logp[np.arange(labels.shape[0]), labels].mean())


def floor_probs(q, floor=PROB_FLOOR):
    q = np.maximum(np.asarray(q, dtype=np.float64), floor)
    return q / q.sum(axis=-1, keepdims=True)


def kl_rows(p, q):
    """KL(p_i || q_i) in nats for each row of two (batch, classes) arrays.

    ``q`` is floored at 1e-12 and renormalised so the result is always finite;
    terms with p_i = 0 contribute zero.
    """
    p = np.atleast_2d(np.asarray(p, dtype=np.float64))
    q = np.atleast_2d(np.asarray(q, dtype=np.float64))
    if p.shape != q.shape:
        raise InvalidArgument(f"shape mismatch: {p.shape} vs {q.shape}")
    q = floor_probs(q)
    mask = p > 0
    safe_p = np.where(mask, p, 1.0)
    terms = np.where(mask, p * (np.log(safe_p) - np.log(q)), 0.0)
    # Rounding can push an exact-zero divergence a hair below zero.
    return np.maximum(terms.sum(axis=-1), 0.0)


def kl_divergence(p, q):
    """KL(p || q) for two probability vectors of equal length."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.ndim != 1 or q.ndim != 1 or p.shape != q.shape:
        raise InvalidArgument(f"kl_divergence needs equal-length vectors, got {p.shape} and {q.shape}")
    return float(kl_rows(p, q)[0])
