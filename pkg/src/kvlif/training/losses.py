"""Losses over logits-over-time ``(batch, classes, T)``; each returns ``(loss, dloss/dlogits)``."""

from __future__ import annotations

import numpy as np


def _log_softmax(z: np.ndarray, axis: int = 1) -> np.ndarray:
    z = z - z.max(axis=axis, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=axis, keepdims=True))


def _check_labels(labels, n_classes: int, batch: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.shape != (batch,):
        raise ValueError(f"expected {batch} labels, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise ValueError(f"labels must lie in [0, {n_classes}), got range [{labels.min()}, {labels.max()}]")
    return labels.astype(np.int64)


def loss_ce_mean(logits, labels):
    """Softmax cross-entropy on the time-averaged logits, averaged over the batch."""
    logits = np.asarray(logits)
    B, C, T = logits.shape
    labels = _check_labels(labels, C, B)
    mean = logits.mean(axis=2)
    logp = _log_softmax(mean)
    loss = -logp[np.arange(B), labels].mean()
    d = np.exp(logp)
    d[np.arange(B), labels] -= 1.0
    d /= B
    grad = np.repeat(d[:, :, None] / T, T, axis=2)
    return float(loss), grad


def loss_tet(logits, labels, lamb: float = 0.05, target: float = 1.0):
    """TET-style loss: per-step cross-entropy plus a pull of every logit towards ``target``.

    ``(1 - lamb) * mean_t CE(logits[..., t]) + lamb * mean((logits - target)^2)``.
    """
    if not 0.0 <= lamb <= 1.0:
        raise ValueError(f"lamb must lie in [0, 1], got {lamb}")
    logits = np.asarray(logits)
    B, C, T = logits.shape
    labels = _check_labels(labels, C, B)
    logp = _log_softmax(logits, axis=1)
    rows = np.arange(B)
    ce = -logp[rows, labels, :].mean()
    d_ce = np.exp(logp)
    d_ce[rows, labels, :] -= 1.0
    d_ce /= B * T
    diff = logits - target
    mse = np.mean(diff**2)
    d_mse = 2.0 * diff / diff.size
    loss = (1.0 - lamb) * ce + lamb * mse
    return float(loss), (1.0 - lamb) * d_ce + lamb * d_mse
