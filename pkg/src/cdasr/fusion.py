"""Contrastive logit fusion.

fuse_single computes the plain positive/negative difference; fuse_multi
aggregates K negative logit vectors through a temperature-weighted
log-mean-exp before subtraction. Both treat the vocabulary axis as the
last axis and accept stacked inputs, so a whole batch of steps can be
fused in one call. All arithmetic runs in float64 regardless of input
dtype.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np


def fuse_single(pos: np.ndarray, neg: np.ndarray, alpha: float) -> np.ndarray:
    """Elementwise (1 + alpha) * pos - alpha * neg."""
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    pos = np.asarray(pos, dtype=np.float64)
    neg = np.asarray(neg, dtype=np.float64)
    if pos.shape != neg.shape:
        raise ValueError(f"logit shape mismatch: {pos.shape} vs {neg.shape}")
    return (1.0 + alpha) * pos - alpha * neg


def log_mean_exp(rows: np.ndarray, tau: float) -> np.ndarray:
    """Stable log((1/K) * sum_k exp(rows[k] / tau)) over the first axis.

    The per-component maximum is subtracted before exponentiation, so the
    result stays finite for inputs of large magnitude.
    """
    scaled = np.asarray(rows, dtype=np.float64) / tau
    m = scaled.max(axis=0)
    return m + np.log(np.mean(np.exp(scaled - m), axis=0))


def fuse_multi(
    pos: np.ndarray,
    negs: Sequence[np.ndarray],
    alpha: float,
    tau: float,
) -> np.ndarray:
    """Fuse a positive logit vector against K >= 1 negatives.

    Computes (1 + alpha*tau) * pos - alpha*tau * log-mean-exp(neg_k / tau).
    With K == 1 and tau == 1 this reduces exactly to fuse_single. A small
    tau concentrates the aggregate on the dominant negative; a large tau
    approaches a smooth average.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if len(negs) < 1:
        raise ValueError("fuse_multi needs at least one negative")
    pos = np.asarray(pos, dtype=np.float64)
    stacked = np.stack([np.asarray(n, dtype=np.float64) for n in negs], axis=0)
    if stacked.shape[1:] != pos.shape:
        raise ValueError(
            f"logit shape mismatch: pos {pos.shape} vs negs {stacked.shape[1:]}"
        )
    at = alpha * tau
    fused = (1.0 + at) * pos - at * log_mean_exp(stacked, tau)
    if not np.isfinite(fused).all():
        raise ValueError("non-finite fused logits; check the input logit vectors")
    return fused
