"""L1-loss linear SVM trained by dual coordinate descent.

The bias is handled as an extra constant feature of value 1, so it is
regularised together with the weights:

    min 1/2 (|w|^2 + b^2) + C * sum_r max(0, 1 - y_r (w . x_r + b))
"""

from __future__ import annotations

import numba
import numpy as np
import scipy.sparse as sp

from .models import ClassifierKind, LinearModel, TrainingError

DEFAULT_TOL = 1e-4
MAX_EPOCHS = 10_000


@numba.njit(cache=True)
def _dual_cd(indptr, indices, data, y, K, C, tol, max_epochs, seed):
    n = y.shape[0]
    w = np.zeros(K)
    b = 0.0
    alpha = np.zeros(n)
    qd = np.ones(n)  # bias feature contributes 1
    for i in range(n):
        for j in range(indptr[i], indptr[i + 1]):
            qd[i] += data[j] * data[j]
    order = np.arange(n)
    np.random.seed(seed)
    for epoch in range(max_epochs):
        np.random.shuffle(order)
        max_violation = 0.0
        for t in range(n):
            i = order[t]
            margin = b
            for j in range(indptr[i], indptr[i + 1]):
                margin += w[indices[j]] * data[j]
            G = y[i] * margin - 1.0
            a = alpha[i]
            if a == 0.0:
                PG = min(G, 0.0)
            elif a == C:
                PG = max(G, 0.0)
            else:
                PG = G
            if abs(PG) > max_violation:
                max_violation = abs(PG)
            if PG != 0.0:
                a_new = min(max(a - G / qd[i], 0.0), C)
                delta = (a_new - a) * y[i]
                alpha[i] = a_new
                for j in range(indptr[i], indptr[i + 1]):
                    w[indices[j]] += delta * data[j]
                b += delta
        if max_violation < tol:
            return w, b, alpha, epoch + 1, True
    return w, b, alpha, max_epochs, False


def _signed(labels) -> np.ndarray:
    y = np.asarray(labels)
    if set(np.unique(y)) - {0, 1, -1}:
        raise ValueError("labels must be 0/1 or -1/+1")
    if not ((y == 1).any() and (y != 1).any()):
        raise TrainingError("training data must contain both classes")
    return np.where(y == 1, 1.0, -1.0)


def train_svm(
    m,
    labels=None,
    C: float = 1.0,
    tol: float = DEFAULT_TOL,
    max_epochs: int = MAX_EPOCHS,
    seed: int = 0,
) -> LinearModel:
    if C <= 0:
        raise ValueError("C must be positive")
    X = m.X if hasattr(m, "X") else m
    y = _signed(m.labels if labels is None else labels)
    X = sp.csr_matrix(X, dtype=np.float64)
    X.sort_indices()
    w, b, _, epochs, converged = _dual_cd(
        X.indptr.astype(np.int64),
        X.indices.astype(np.int64),
        X.data,
        y,
        X.shape[1],
        float(C),
        float(tol),
        int(max_epochs),
        int(seed),
    )
    if not converged:
        raise TrainingError(f"SVM dual coordinate descent did not converge within {max_epochs} epochs (C={C})")
    return LinearModel(w, float(b), ClassifierKind.SVM, {"C": float(C), "epochs": int(epochs)})


def svm_objective(model: LinearModel, m, labels=None, C: float | None = None) -> float:
    X = m.X if hasattr(m, "X") else m
    y = _signed(m.labels if labels is None else labels)
    C = model.params["C"] if C is None else C
    margins = y * model.decision_function(X)
    return 0.5 * (model.weights @ model.weights + model.bias**2) + C * np.maximum(0.0, 1.0 - margins).sum()
