"""Featurisation fitted on training documents and applied to held-out ones.

Every statistic (vocabulary, document counts, PCA mean and components) is
estimated from the training rows only.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import __version__
from .classifiers import ClassifierKind, LinearModel, VttModel
from .features import (
    TRANSFORMS,
    OccurrenceMatrix,
    PcaModel,
    Vocabulary,
    apply_transform,
    build_matrix,
    pca_fit,
    pca_project,
)
from .ner import NerCounts, append_ner_features

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class PipelineConfig:
    """How documents become a design matrix.

    ``pca_k=None`` keeps the full dimensionality, except that with
    ``lda_fallback`` a matrix with fewer training rows than columns is
    projected onto its first ``N - 1`` principal components.  Requested
    ``pca_k`` values larger than ``N - 1`` are clamped.
    """

    bigrams: bool = False
    transform: str = "none"
    pca_k: int | None = None
    ner_tools: tuple[str, ...] = ()
    ner_as_columns: bool = True
    lda_fallback: bool = False
    tfidf_length: str = "features"

    def __post_init__(self):
        if self.transform not in TRANSFORMS:
            raise ValueError(f"unknown transform {self.transform!r}")
        if self.pca_k is not None and self.pca_k < 1:
            raise ValueError("pca_k must be positive")

    def to_json(self) -> dict:
        return {
            "bigrams": self.bigrams,
            "transform": self.transform,
            "pca_k": self.pca_k,
            "ner_tools": list(self.ner_tools),
            "ner_as_columns": self.ner_as_columns,
            "lda_fallback": self.lda_fallback,
            "tfidf_length": self.tfidf_length,
        }

    @classmethod
    def from_json(cls, d: dict) -> "PipelineConfig":
        return cls(**{**d, "ner_tools": tuple(d.get("ner_tools", ()))})


@dataclass(frozen=True)
class Design:
    """Classifier input: feature values, labels, and NER counts kept apart for VTT."""

    X: object
    y: np.ndarray
    ids: tuple[str, ...]
    ner: np.ndarray | None = None


@dataclass(frozen=True)
class FittedPipeline:
    config: PipelineConfig
    vocab: Vocabulary
    pca: PcaModel | None = None

    def apply(self, m: OccurrenceMatrix, ner: NerCounts | None = None) -> Design:
        """Transform a binary textual matrix laid out by ``self.vocab``."""
        cfg = self.config
        m = apply_transform(m, self.vocab, cfg.transform, cfg.tfidf_length)
        ner_values = None
        if cfg.ner_tools:
            if ner is None:
                raise ValueError(f"pipeline needs NER counts for {cfg.ner_tools}")
            if cfg.ner_as_columns:
                m, _ = append_ner_features(m, ner, cfg.ner_tools)
            else:
                ner_values = ner.matrix(m.ids, cfg.ner_tools)
        if self.pca is not None:
            m = pca_project(self.pca, m)
        return Design(X=m.X, y=m.labels, ids=m.ids, ner=ner_values)


def effective_pca_k(config: PipelineConfig, n_rows: int, n_cols: int) -> int | None:
    limit = min(n_rows - 1, n_cols)
    if config.pca_k is not None:
        return min(config.pca_k, limit)
    if config.lda_fallback and n_rows < n_cols:
        return limit
    return None


def fit_pipeline(
    config: PipelineConfig,
    train: OccurrenceMatrix,
    vocab: Vocabulary,
    ner: NerCounts | None = None,
) -> tuple[FittedPipeline, Design]:
    """Fit PCA (if any) on the training matrix; return the pipeline and training design."""
    partial = FittedPipeline(config, vocab, None)
    design = partial.apply(train, ner)
    k = effective_pca_k(config, *design.X.shape)
    if k is None:
        return partial, design
    pca = pca_fit(design.X, k)
    fitted = FittedPipeline(config, vocab, pca)
    Z = pca_project(pca, design.X)
    return fitted, Design(X=Z, y=design.y, ids=design.ids, ner=design.ner)


def fit_from_documents(config: PipelineConfig, docs, ner: NerCounts | None = None):
    m, vocab = build_matrix(docs, config.bigrams)
    return fit_pipeline(config, m, vocab, ner)


def transform_documents(fitted: FittedPipeline, docs, ner: NerCounts | None = None) -> Design:
    m, _ = build_matrix(docs, fitted.config.bigrams, vocab=fitted.vocab)
    return fitted.apply(m, ner)


def vocabulary_hash(vocab: Vocabulary) -> str:
    h = hashlib.sha256()
    for f, c in zip(vocab.features, vocab.doc_counts):
        h.update(f"{f}\t{int(c)}\n".encode("utf-8"))
    return h.hexdigest()


def model_to_json(model, fitted: FittedPipeline) -> dict:
    out = {
        "format": "lintext-model",
        "version": MODEL_FORMAT_VERSION,
        "tool_version": __version__,
        "kind": model.kind.value,
        "params": model.params,
        "vocabulary_hash": vocabulary_hash(fitted.vocab),
        "transform": fitted.config.to_json(),
        "vocabulary": fitted.vocab.to_json(),
        "pca": fitted.pca.to_json() if fitted.pca is not None else None,
    }
    if isinstance(model, VttModel):
        out.update(
            theta=model.theta.tolist(),
            lambda_=model.lambda_,
            beta=np.asarray(model.beta).tolist(),
            ner_tool_ids=list(model.ner_tool_ids),
        )
    else:
        out.update(weights=model.weights.tolist(), bias=model.bias)
    return out


def model_from_json(data: dict):
    if data.get("format") != "lintext-model":
        raise ValueError("not a lintext model file")
    if data.get("version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model version {data.get('version')}")
    vocab = Vocabulary.from_json(data["vocabulary"])
    if vocabulary_hash(vocab) != data["vocabulary_hash"]:
        raise ValueError("vocabulary hash mismatch; model file is corrupt")
    pca = PcaModel.from_json(data["pca"]) if data.get("pca") else None
    fitted = FittedPipeline(PipelineConfig.from_json(data["transform"]), vocab, pca)
    kind = ClassifierKind(data["kind"])
    if kind is ClassifierKind.VTT:
        model = VttModel(
            theta=np.asarray(data["theta"], dtype=np.float64),
            lambda_=float(data["lambda_"]),
            beta=np.asarray(data["beta"], dtype=np.float64),
            ner_tool_ids=tuple(data["ner_tool_ids"]),
            params=data.get("params", {}),
        )
    else:
        model = LinearModel(
            np.asarray(data["weights"], dtype=np.float64),
            float(data["bias"]),
            kind,
            data.get("params", {}),
        )
    return model, fitted


def save_model(model, fitted: FittedPipeline, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_json(model, fitted), fh)


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return model_from_json(json.load(fh))


def ner_tool_subset(counts: NerCounts | None, tools: Sequence[str]) -> NerCounts | None:
    if not tools:
        return None
    if counts is None:
        raise ValueError(f"NER tools {list(tools)} requested but no counts were loaded")
    missing = set(tools) - set(counts.tool_ids)
    if missing:
        raise ValueError(f"no NER counts loaded for tools {sorted(missing)}")
    return counts.select(tools)
