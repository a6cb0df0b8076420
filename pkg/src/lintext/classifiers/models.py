"""Trained model types shared by all six classifiers."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..corpus import Label


class ClassifierKind(enum.Enum):
    VTT = "vtt"
    SVM = "svm"
    LOGREG = "logreg"
    NAIVE_BAYES = "nb"
    LDA = "lda"
    DLDA = "dlda"


class TrainingError(RuntimeError):
    """A classifier could not be fitted with the given data or parameter."""


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    bias: float
    kind: ClassifierKind
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (np.all(np.isfinite(self.weights)) and np.isfinite(self.bias)):
            raise TrainingError(f"{self.kind.value} produced non-finite weights")

    @property
    def n_features(self) -> int:
        return len(self.weights)

    def decision_function(self, X, ner_counts=None) -> np.ndarray:
        _check_width(X, self.n_features)
        return np.asarray(X @ self.weights).ravel() + self.bias


@dataclass(frozen=True)
class VttModel:
    """Angle weights ``theta`` for textual features plus the NER beta terms."""

    theta: np.ndarray
    lambda_: float
    beta: np.ndarray = field(default_factory=lambda: np.zeros(0))
    ner_tool_ids: tuple[str, ...] = ()
    params: dict = field(default_factory=dict)

    kind = ClassifierKind.VTT

    def __post_init__(self):
        if len(self.beta) != len(self.ner_tool_ids):
            raise ValueError("one beta per NER tool is required")
        if np.any(np.asarray(self.beta) <= 0):
            raise ValueError("beta weights must be positive")

    @property
    def n_features(self) -> int:
        return len(self.theta)

    def raw_scores(self, X, ner_counts=None) -> np.ndarray:
        """Hyperplane scores without the ``lambda_`` threshold."""
        _check_width(X, self.n_features)
        scores = np.asarray(X @ self.theta, dtype=np.float64).ravel()
        J = len(self.beta)
        if J:
            C = _ner_array(ner_counts, X.shape[0], J)
            scores = scores - ((self.beta - C) / self.beta).sum(axis=1)
        elif ner_counts is not None and np.size(ner_counts):
            raise ValueError(f"model has no NER terms but got {np.shape(ner_counts)} counts")
        return scores

    def decision_function(self, X, ner_counts=None) -> np.ndarray:
        return self.raw_scores(X, ner_counts) - self.lambda_


def _ner_array(ner_counts, n_rows: int, J: int) -> np.ndarray:
    if ner_counts is None:
        raise ValueError(f"model expects {J} NER counts per document")
    C = np.asarray(ner_counts, dtype=np.float64)
    if C.ndim == 1:
        C = C.reshape(1, -1) if n_rows == 1 else C.reshape(-1, 1)
    if C.shape != (n_rows, J):
        raise ValueError(f"expected NER counts of shape {(n_rows, J)}, got {C.shape}")
    return C


def _check_width(X, n_features: int):
    if X.ndim != 2 or X.shape[1] != n_features:
        raise ValueError(f"input has {X.shape[-1]} features, model expects {n_features}")


def _as_row(row) -> np.ndarray | sp.csr_matrix:
    if sp.issparse(row):
        return sp.csr_matrix(row)
    row = np.asarray(row, dtype=np.float64)
    return row.reshape(1, -1) if row.ndim == 1 else row


def predict(model, row, ner_counts=None) -> tuple[float, Label]:
    """Score one document; Relevant iff the score is strictly positive."""
    X = _as_row(row)
    if X.shape[0] != 1:
        raise ValueError("predict expects a single row")
    score = float(model.decision_function(X, ner_counts)[0])
    return score, (Label.RELEVANT if score > 0 else Label.IRRELEVANT)


def predict_labels(scores: np.ndarray) -> np.ndarray:
    return (np.asarray(scores) > 0).astype(np.int64)
