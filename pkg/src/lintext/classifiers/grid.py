"""Hyperparameter grids and per-grid-point training."""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field

import numpy as np

from .bayes import train_naive_bayes
from .discriminant import dlda_from_variances, lda_from_scatter, lda_scatter, pooled_variances
from .logreg import train_logreg
from .models import ClassifierKind, TrainingError, VttModel
from .svm import train_svm
from .vtt import feature_stats, vtt_theta


def _default_quantiles() -> list[float]:
    return [k / 26 for k in range(1, 26)]


@dataclass
class HyperGrid:
    """Candidate values searched by the inner cross-validation."""

    svm_C: list[float] = field(default_factory=lambda: [0.01, 0.1, 1.0, 10.0, 100.0])
    logreg_C: list[float] = field(default_factory=lambda: [0.01, 0.1, 1.0, 10.0, 100.0])
    nb_alpha: list[float] = field(default_factory=lambda: [0.1, 0.5, 1.0, 2.0, 5.0])
    lda_shrinkage: list[float] = field(default_factory=lambda: [0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0])
    dlda_shrinkage: list[float] = field(default_factory=lambda: [0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0])
    vtt_lambda_quantile: list[float] = field(default_factory=_default_quantiles)
    vtt_beta: list[float] = field(default_factory=lambda: [1.0, 2.0, 4.0, 8.0, 16.0])

    @classmethod
    def from_dict(cls, data: dict) -> "HyperGrid":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown hyperparameter grid keys: {sorted(unknown)}")
        grid = cls(**{k: [float(v) for v in vals] for k, vals in data.items()})
        grid.validate()
        return grid

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self):
        for name in ("svm_C", "logreg_C", "nb_alpha", "vtt_beta"):
            if any(v <= 0 for v in getattr(self, name)):
                raise ValueError(f"{name} values must be positive")
        for name in ("lda_shrinkage", "dlda_shrinkage"):
            if any(not 0 <= v <= 1 for v in getattr(self, name)):
                raise ValueError(f"{name} values must lie in [0, 1]")
        if any(not 0 < q < 1 for q in self.vtt_lambda_quantile):
            raise ValueError("vtt_lambda_quantile values must lie in (0, 1)")

    def points(self, kind: ClassifierKind, n_ner: int = 0) -> list[dict]:
        """Grid points ordered simplest first; ties resolve to the earliest."""
        if kind is ClassifierKind.SVM:
            return [{"C": c} for c in sorted(self.svm_C)]
        if kind is ClassifierKind.LOGREG:
            return [{"C": c} for c in sorted(self.logreg_C)]
        if kind is ClassifierKind.NAIVE_BAYES:
            return [{"alpha": a} for a in sorted(self.nb_alpha)]
        if kind is ClassifierKind.LDA:
            return [{"shrinkage": g} for g in sorted(self.lda_shrinkage, reverse=True)]
        if kind is ClassifierKind.DLDA:
            return [{"shrinkage": g} for g in sorted(self.dlda_shrinkage, reverse=True)]
        betas = list(itertools.product(sorted(self.vtt_beta, reverse=True), repeat=n_ner))
        return [
            {"lambda_quantile": q, "beta": list(b)}
            for q in sorted(self.vtt_lambda_quantile)
            for b in betas
        ]


def train_path(kind: ClassifierKind, m, labels, points: list[dict], ner_counts=None, ner_tool_ids=()):
    """Train one model per grid point.

    Returns a list aligned with ``points`` holding either a model or the
    :class:`TrainingError` raised for that point.  Work that does not depend
    on the grid value (covariance eigendecomposition, VTT angles) is shared.
    """
    X = m.X if hasattr(m, "X") else m
    y = np.asarray(m.labels if labels is None else labels)

    def each(fn):
        out = []
        for p in points:
            try:
                out.append(fn(p))
            except TrainingError as exc:
                out.append(exc)
        return out

    if kind is ClassifierKind.SVM:
        return each(lambda p: train_svm(X, y, C=p["C"]))
    if kind is ClassifierKind.LOGREG:
        return each(lambda p: train_logreg(X, y, C=p["C"]))
    if kind is ClassifierKind.NAIVE_BAYES:
        return each(lambda p: train_naive_bayes(X, y, alpha=p["alpha"]))
    if kind is ClassifierKind.LDA:
        sc = lda_scatter(X, y)
        return each(lambda p: lda_from_scatter(sc, p["shrinkage"]))
    if kind is ClassifierKind.DLDA:
        mom, var = pooled_variances(X, y)
        return each(lambda p: dlda_from_variances(mom, var, p["shrinkage"]))
    if kind is ClassifierKind.VTT:
        theta = vtt_theta(feature_stats(X, y))
        tools = tuple(ner_tool_ids)

        def fit(p):
            beta = np.asarray(p["beta"], dtype=np.float64)
            base = VttModel(theta=theta, lambda_=0.0, beta=beta, ner_tool_ids=tools)
            lam = float(np.quantile(base.raw_scores(X, ner_counts), p["lambda_quantile"]))
            return VttModel(
                theta=theta,
                lambda_=lam,
                beta=beta,
                ner_tool_ids=tools,
                params={"lambda": lam, "lambda_quantile": p["lambda_quantile"], "beta": beta.tolist()},
            )

        return each(fit)
    raise ValueError(f"unknown classifier {kind}")
