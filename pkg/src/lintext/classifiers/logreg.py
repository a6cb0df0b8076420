"""L2-penalised logistic regression with an unpenalised intercept."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize
from scipy.special import expit

from .models import ClassifierKind, LinearModel, TrainingError
from .svm import _signed

GRAD_TOL = 1e-6
MAX_ITER = 500


def penalized_loss(params: np.ndarray, X, y: np.ndarray, C: float) -> float:
    """sum_r log(1 + exp(-y_r (w.x_r + b))) + |w|^2 / (2C); ``params = [w, b]``."""
    w, b = params[:-1], params[-1]
    z = np.asarray(X @ w).ravel() + b
    return float(np.logaddexp(0.0, -y * z).sum() + 0.5 * (w @ w) / C)


def penalized_grad(params: np.ndarray, X, y: np.ndarray, C: float) -> np.ndarray:
    w, b = params[:-1], params[-1]
    z = np.asarray(X @ w).ravel() + b
    g = -y * expit(-y * z)
    return np.concatenate([np.asarray(X.T @ g).ravel() + w / C, [g.sum()]])


def _hessp(params, v, X, y, C):
    w, b = params[:-1], params[-1]
    z = np.asarray(X @ w).ravel() + b
    s = expit(z)
    d = s * (1.0 - s)
    u = d * (np.asarray(X @ v[:-1]).ravel() + v[-1])
    return np.concatenate([np.asarray(X.T @ u).ravel() + v[:-1] / C, [u.sum()]])


def train_logreg(m, labels=None, C: float = 1.0, max_iter: int = MAX_ITER) -> LinearModel:
    if C <= 0:
        raise ValueError("C must be positive")
    X = m.X if hasattr(m, "X") else m
    y = _signed(m.labels if labels is None else labels)
    X = sp.csr_matrix(X, dtype=np.float64) if sp.issparse(X) else np.asarray(X, dtype=np.float64)
    x0 = np.zeros(X.shape[1] + 1)
    res = minimize(
        penalized_loss,
        x0,
        args=(X, y, float(C)),
        jac=penalized_grad,
        hessp=_hessp,
        method="trust-ncg",
        options={"gtol": GRAD_TOL * 1e-2, "maxiter": max_iter},
    )
    grad = penalized_grad(res.x, X, y, float(C))
    if np.max(np.abs(grad)) >= GRAD_TOL:
        raise TrainingError(
            f"logistic regression did not reach gradient tolerance {GRAD_TOL} within {max_iter} iterations (C={C})"
        )
    return LinearModel(
        res.x[:-1].copy(), float(res.x[-1]), ClassifierKind.LOGREG, {"C": float(C), "iterations": int(res.nit)}
    )
