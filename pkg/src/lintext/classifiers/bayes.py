"""Bernoulli (binomial) Naive Bayes with a symmetric Beta prior."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .models import ClassifierKind, LinearModel, TrainingError


def smoothed_rates(X, y: np.ndarray, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Posterior-mean occurrence rates (count + alpha) / (class size + 2 alpha)."""
    pos, neg = y == 1, y != 1
    cnt_pos = np.asarray(X[pos].sum(axis=0)).ravel()
    cnt_neg = np.asarray(X[neg].sum(axis=0)).ravel()
    q_pos = (cnt_pos + alpha) / (pos.sum() + 2 * alpha)
    q_neg = (cnt_neg + alpha) / (neg.sum() + 2 * alpha)
    return q_pos, q_neg


def train_naive_bayes(m, labels=None, alpha: float = 1.0) -> LinearModel:
    """Log-posterior-odds of the Bernoulli likelihood, written as w.x + b.

    Absent features contribute their (1 - q) factors, which fold into the
    bias.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    X = m.X if hasattr(m, "X") else m
    y = np.asarray(m.labels if labels is None else labels)
    values = X.data if sp.issparse(X) else np.asarray(X).ravel()
    if not np.all((values == 0) | (values == 1)):
        raise ValueError("Naive Bayes needs a binary occurrence matrix")
    n_pos, n_neg = int((y == 1).sum()), int((y != 1).sum())
    if n_pos == 0 or n_neg == 0:
        raise TrainingError("training data must contain both classes")

    q_pos, q_neg = smoothed_rates(X, y, alpha)
    weights = np.log(q_pos) + np.log1p(-q_neg) - np.log(q_neg) - np.log1p(-q_pos)
    bias = np.log(n_pos / n_neg) + np.sum(np.log1p(-q_pos) - np.log1p(-q_neg))
    return LinearModel(weights, float(bias), ClassifierKind.NAIVE_BAYES, {"alpha": float(alpha)})
