"""Variable Trigonometric Threshold classifier (angle-domain form)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .models import TrainingError, VttModel


@dataclass(frozen=True)
class FeatureStats:
    pos_rate: np.ndarray  # fraction of positive documents containing each feature
    neg_rate: np.ndarray  # same for negative documents


def _xy(m, labels):
    if labels is None:
        return m.X, np.asarray(m.labels)
    X = m.X if hasattr(m, "X") else m
    return X, np.asarray(labels)


def feature_stats(m, labels=None) -> FeatureStats:
    """Per-class occurrence proportions; any nonzero cell counts as present."""
    X, y = _xy(m, labels)
    pos, neg = y == 1, y != 1
    if not pos.any() or not neg.any():
        raise TrainingError("feature statistics need documents from both classes")
    present = (X != 0).astype(np.float64)
    if sp.issparse(present):
        pos_rate = np.asarray(present[pos].mean(axis=0)).ravel()
        neg_rate = np.asarray(present[neg].mean(axis=0)).ravel()
    else:
        pos_rate = present[pos].mean(axis=0)
        neg_rate = present[neg].mean(axis=0)
    return FeatureStats(pos_rate, neg_rate)


def vtt_theta(stats: FeatureStats) -> np.ndarray:
    """arctan(pos/neg) - pi/4; pi/4 when only positives contain the feature, 0 when none do."""
    pos = np.asarray(stats.pos_rate, dtype=np.float64)
    neg = np.asarray(stats.neg_rate, dtype=np.float64)
    theta = np.arctan2(pos, neg) - np.pi / 4
    theta[(pos == 0) & (neg == 0)] = 0.0
    return theta


def train_vtt(
    m,
    labels=None,
    lambda_: float = 0.0,
    beta=(),
    ner_tool_ids=(),
) -> VttModel:
    theta = vtt_theta(feature_stats(m, labels))
    beta = np.asarray(beta, dtype=np.float64).ravel()
    return VttModel(
        theta=theta,
        lambda_=float(lambda_),
        beta=beta,
        ner_tool_ids=tuple(ner_tool_ids),
        params={"lambda": float(lambda_), "beta": beta.tolist()},
    )


def vtt_score(model: VttModel, x, ner_counts=None) -> float:
    X = sp.csr_matrix(x) if sp.issparse(x) else np.atleast_2d(np.asarray(x, dtype=np.float64))
    if ner_counts is not None:
        ner_counts = np.atleast_2d(np.asarray(ner_counts, dtype=np.float64))
    return float(model.decision_function(X, ner_counts)[0])


def quantile_threshold(model: VttModel, X, ner_counts, q: float) -> float:
    """Threshold at quantile ``q`` of the raw training-score distribution."""
    return float(np.quantile(model.raw_scores(X, ner_counts), q))
