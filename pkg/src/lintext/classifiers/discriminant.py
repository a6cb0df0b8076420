"""Shrinkage LDA and diagonal LDA.

Both shrink the pooled within-class covariance toward an equal-variance
diagonal target whose variance is the mean of the sample variances:

    Sigma_g = (1 - g) S + g * (trace(S) / d) I

Scores are log-posterior-odds under shared-covariance Gaussian classes, so
the bias includes the log prior ratio.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .models import ClassifierKind, LinearModel, TrainingError

_SINGULAR_RTOL = 1e-10


@dataclass(frozen=True)
class _ClassMoments:
    mu_pos: np.ndarray
    mu_neg: np.ndarray
    log_prior_ratio: float
    n: int


def _moments(X, y: np.ndarray) -> _ClassMoments:
    pos, neg = y == 1, y != 1
    n_pos, n_neg = int(pos.sum()), int(neg.sum())
    if n_pos == 0 or n_neg == 0:
        raise TrainingError("training data must contain both classes")
    if n_pos + n_neg < 3:
        raise TrainingError("pooled covariance needs at least 3 documents")
    mu_pos = np.asarray(X[pos].mean(axis=0)).ravel()
    mu_neg = np.asarray(X[neg].mean(axis=0)).ravel()
    return _ClassMoments(mu_pos, mu_neg, float(np.log(n_pos / n_neg)), n_pos + n_neg)


def _linear_model(w, mom: _ClassMoments, kind, params) -> LinearModel:
    bias = -w @ (mom.mu_pos + mom.mu_neg) / 2.0 + mom.log_prior_ratio
    return LinearModel(w, float(bias), kind, params)


def _xy(m, labels):
    X = m.X if hasattr(m, "X") else m
    return X, np.asarray(m.labels if labels is None else labels)


def _check_shrinkage(g: float):
    if not 0.0 <= g <= 1.0:
        raise ValueError(f"shrinkage must lie in [0, 1], got {g}")


@dataclass(frozen=True)
class LdaScatter:
    """Eigendecomposition of the pooled covariance, reusable across shrinkages."""

    moments: _ClassMoments
    eigvals: np.ndarray
    eigvecs: np.ndarray

    @property
    def target_variance(self) -> float:
        return float(self.eigvals.sum() / len(self.eigvals))


def lda_scatter(m, labels=None) -> LdaScatter:
    X, y = _xy(m, labels)
    X = X.toarray() if sp.issparse(X) else np.asarray(X, dtype=np.float64)
    mom = _moments(X, y)
    Z = np.where((y == 1)[:, None], X - mom.mu_pos, X - mom.mu_neg)
    S = (Z.T @ Z) / (mom.n - 2)
    lam, V = scipy.linalg.eigh(S)
    return LdaScatter(mom, np.clip(lam, 0.0, None), V)


def lda_from_scatter(sc: LdaScatter, shrinkage: float) -> LinearModel:
    _check_shrinkage(shrinkage)
    eig = (1.0 - shrinkage) * sc.eigvals + shrinkage * sc.target_variance
    if eig.max() <= 0 or eig.min() <= _SINGULAR_RTOL * eig.max():
        raise TrainingError(
            f"shrunk covariance is singular at shrinkage={shrinkage}; "
            "reduce dimensionality with PCA or use shrinkage > 0"
        )
    delta = sc.moments.mu_pos - sc.moments.mu_neg
    w = sc.eigvecs @ ((sc.eigvecs.T @ delta) / eig)
    return _linear_model(w, sc.moments, ClassifierKind.LDA, {"shrinkage": float(shrinkage)})


def train_lda(m, labels=None, shrinkage: float = 0.0) -> LinearModel:
    return lda_from_scatter(lda_scatter(m, labels), shrinkage)


def pooled_variances(m, labels=None) -> tuple[_ClassMoments, np.ndarray]:
    X, y = _xy(m, labels)
    mom = _moments(X, y)
    pos = y == 1
    if sp.issparse(X):
        X = sp.csr_matrix(X, dtype=np.float64)
        sq = np.asarray(X.multiply(X).sum(axis=0)).ravel()
        ss = sq - pos.sum() * mom.mu_pos**2 - (~pos).sum() * mom.mu_neg**2
    else:
        X = np.asarray(X, dtype=np.float64)
        ss = ((X[pos] - mom.mu_pos) ** 2).sum(axis=0) + ((X[~pos] - mom.mu_neg) ** 2).sum(axis=0)
    return mom, np.clip(ss, 0.0, None) / (mom.n - 2)


def dlda_from_variances(mom: _ClassMoments, var: np.ndarray, shrinkage: float) -> LinearModel:
    _check_shrinkage(shrinkage)
    shrunk = (1.0 - shrinkage) * var + shrinkage * var.mean()
    if shrunk.max() <= 0 or shrunk.min() <= _SINGULAR_RTOL * shrunk.max():
        raise TrainingError(
            f"a feature has zero variance at shrinkage={shrinkage}; use shrinkage > 0"
        )
    w = (mom.mu_pos - mom.mu_neg) / shrunk
    return _linear_model(w, mom, ClassifierKind.DLDA, {"shrinkage": float(shrinkage)})


def train_dlda(m, labels=None, shrinkage: float = 0.0) -> LinearModel:
    mom, var = pooled_variances(m, labels)
    return dlda_from_variances(mom, var, shrinkage)
