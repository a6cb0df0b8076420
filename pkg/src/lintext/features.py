"""Occurrence matrices, document-frequency transforms and PCA."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .corpus import TokenizedDocument

MIN_DOC_COUNT = 2

TRANSFORMS = ("none", "idf", "tfidf", "norm", "idf+norm", "tfidf+norm")


class FeatureKind(enum.Enum):
    UNIGRAM = "unigram"
    BIGRAM = "bigram"
    NER_COUNT = "ner_count"


class FeatureError(ValueError):
    pass


@dataclass(frozen=True)
class Vocabulary:
    """Column layout of a matrix plus the training statistics behind it.

    ``doc_counts[i]`` is the number of training documents containing feature
    ``i`` and ``n_docs`` the number of training documents.
    """

    features: tuple[str, ...]
    kinds: tuple[FeatureKind, ...]
    doc_counts: np.ndarray
    n_docs: int
    bigrams: bool
    index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "index", {f: i for i, f in enumerate(self.features)})
        if len(self.kinds) != len(self.features) or len(self.doc_counts) != len(self.features):
            raise FeatureError("vocabulary arrays disagree in length")

    def __len__(self) -> int:
        return len(self.features)

    @property
    def textual(self) -> np.ndarray:
        """Boolean mask of unigram/bigram columns."""
        return np.array([k is not FeatureKind.NER_COUNT for k in self.kinds], dtype=bool)

    def with_ner(self, tool_ids: Sequence[str]) -> "Vocabulary":
        return Vocabulary(
            features=self.features + tuple(f"NER:{t}" for t in tool_ids),
            kinds=self.kinds + (FeatureKind.NER_COUNT,) * len(tool_ids),
            doc_counts=np.concatenate([self.doc_counts, np.zeros(len(tool_ids), dtype=np.int64)]),
            n_docs=self.n_docs,
            bigrams=self.bigrams,
        )

    def to_json(self) -> dict:
        return {
            "features": list(self.features),
            "kinds": [k.value for k in self.kinds],
            "doc_counts": [int(c) for c in self.doc_counts],
            "n_docs": int(self.n_docs),
            "bigrams": self.bigrams,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Vocabulary":
        return cls(
            features=tuple(data["features"]),
            kinds=tuple(FeatureKind(k) for k in data["kinds"]),
            doc_counts=np.asarray(data["doc_counts"], dtype=np.int64),
            n_docs=int(data["n_docs"]),
            bigrams=bool(data["bigrams"]),
        )


@dataclass(frozen=True)
class OccurrenceMatrix:
    """Documents x features values with row ids and 0/1 labels aligned.

    ``X`` is a CSR matrix until PCA makes it dense.  ``n_words`` carries the
    per-document token count, used only by the token-count TFIDF variant.
    """

    X: sp.csr_matrix | np.ndarray
    ids: tuple[str, ...]
    labels: np.ndarray
    n_words: np.ndarray | None = None

    def __post_init__(self):
        if self.X.shape[0] != len(self.ids) or len(self.labels) != len(self.ids):
            raise FeatureError("row ids, labels and matrix rows are misaligned")

    @property
    def shape(self) -> tuple[int, int]:
        return self.X.shape

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.X)

    def with_values(self, X) -> "OccurrenceMatrix":
        return replace(self, X=X)

    def rows(self, idx) -> "OccurrenceMatrix":
        idx = np.asarray(idx)
        return OccurrenceMatrix(
            X=self.X[idx],
            ids=tuple(self.ids[i] for i in idx),
            labels=self.labels[idx],
            n_words=None if self.n_words is None else self.n_words[idx],
        )

    def dense(self) -> np.ndarray:
        return self.X.toarray() if self.is_sparse else np.asarray(self.X)


def _doc_features(doc: TokenizedDocument, bigrams: bool) -> tuple[set, set]:
    return doc.unigrams(), (doc.bigrams() if bigrams else set())


def _labels(docs) -> np.ndarray:
    return np.array([d.label.y for d in docs], dtype=np.int64)


def build_matrix(
    docs: Sequence[TokenizedDocument],
    use_bigrams: bool = False,
    vocab: Vocabulary | None = None,
    min_doc_count: int = MIN_DOC_COUNT,
) -> tuple[OccurrenceMatrix, Vocabulary]:
    """Binary occurrence matrix of ``docs``.

    Without ``vocab`` the vocabulary is learned from ``docs``, keeping features
    present in at least ``min_doc_count`` documents.  With ``vocab`` unseen
    features are ignored.
    """
    if vocab is not None and vocab.bigrams != use_bigrams:
        raise FeatureError(
            f"vocabulary was built with bigrams={vocab.bigrams}, requested bigrams={use_bigrams}"
        )
    per_doc = [_doc_features(d, use_bigrams) for d in docs]

    if vocab is None:
        if not docs:
            raise FeatureError("cannot learn a vocabulary from zero documents")
        uni_counts: dict[str, int] = {}
        bi_counts: dict[str, int] = {}
        for uni, bi in per_doc:
            for f in uni:
                uni_counts[f] = uni_counts.get(f, 0) + 1
            for f in bi:
                bi_counts[f] = bi_counts.get(f, 0) + 1
        unis = sorted(f for f, c in uni_counts.items() if c >= min_doc_count)
        bis = sorted(f for f, c in bi_counts.items() if c >= min_doc_count)
        vocab = Vocabulary(
            features=tuple(unis + bis),
            kinds=(FeatureKind.UNIGRAM,) * len(unis) + (FeatureKind.BIGRAM,) * len(bis),
            doc_counts=np.array(
                [uni_counts[f] for f in unis] + [bi_counts[f] for f in bis], dtype=np.int64
            ),
            n_docs=len(docs),
            bigrams=use_bigrams,
        )

    index = vocab.index
    indptr = [0]
    indices: list[int] = []
    for uni, bi in per_doc:
        cols = sorted(index[f] for f in (uni | bi) if f in index)
        indices.extend(cols)
        indptr.append(len(indices))
    X = sp.csr_matrix(
        (np.ones(len(indices)), np.array(indices, dtype=np.int64), np.array(indptr)),
        shape=(len(docs), len(vocab)),
    )
    m = OccurrenceMatrix(
        X=X,
        ids=tuple(d.id for d in docs),
        labels=_labels(docs),
        n_words=np.array([d.n_words for d in docs], dtype=np.float64),
    )
    return m, vocab


class FeatureIndex:
    """Unfiltered occurrence matrix over a whole corpus.

    Column slicing of this matrix reproduces ``build_matrix`` on any subset
    of rows, without re-reading tokens for every fold.  Only the training
    rows of a split influence the vocabulary that :meth:`split` returns.
    """

    def __init__(self, docs: Sequence[TokenizedDocument], use_bigrams: bool = False):
        self.use_bigrams = use_bigrams
        self.full, self.vocab = build_matrix(docs, use_bigrams, min_doc_count=1)
        self._row = {doc_id: i for i, doc_id in enumerate(self.full.ids)}

    def row_indices(self, ids: Sequence[str]) -> np.ndarray:
        return np.array([self._row[i] for i in ids], dtype=np.int64)

    def split(self, train_ids, test_ids=(), min_doc_count: int = MIN_DOC_COUNT):
        train_rows = self.row_indices(train_ids)
        train_all = self.full.rows(train_rows)
        counts = np.asarray(train_all.X.sum(axis=0)).ravel().astype(np.int64)
        keep = np.flatnonzero(counts >= min_doc_count)
        vocab = Vocabulary(
            features=tuple(self.vocab.features[i] for i in keep),
            kinds=tuple(self.vocab.kinds[i] for i in keep),
            doc_counts=counts[keep],
            n_docs=len(train_rows),
            bigrams=self.use_bigrams,
        )
        train = train_all.with_values(train_all.X[:, keep].tocsr())
        test_all = self.full.rows(self.row_indices(test_ids))
        test = test_all.with_values(test_all.X[:, keep].tocsr())
        return train, test, vocab


def _idf_values(vocab: Vocabulary) -> np.ndarray:
    return np.log(vocab.n_docs / (vocab.doc_counts.astype(np.float64) + 1.0))


def _check_width(m: OccurrenceMatrix, vocab: Vocabulary):
    if m.shape[1] != len(vocab):
        raise FeatureError(f"matrix has {m.shape[1]} columns, vocabulary has {len(vocab)}")


def idf_transform(m: OccurrenceMatrix, vocab: Vocabulary) -> OccurrenceMatrix:
    """Replace each nonzero cell of column i by log(N / (c_i + 1)).

    N and c_i come from ``vocab``, i.e. from the training documents.
    NER-count columns pass through unchanged.
    """
    _check_width(m, vocab)
    idf = _idf_values(vocab)
    idf[~vocab.textual] = 1.0
    X = sp.csr_matrix(m.X, dtype=np.float64, copy=True)
    textual = vocab.textual[X.indices]
    X.data = np.where(textual, idf[X.indices], X.data)
    X.eliminate_zeros()
    return m.with_values(X)


def _row_feature_counts(m: OccurrenceMatrix, vocab: Vocabulary) -> np.ndarray:
    X = sp.csr_matrix(m.X)
    rows = np.repeat(np.arange(X.shape[0]), np.diff(X.indptr))
    present = vocab.textual[X.indices] & (X.data != 0)
    return np.bincount(rows[present], minlength=X.shape[0]).astype(np.float64)


def tfidf_transform(
    m: OccurrenceMatrix, vocab: Vocabulary, length: str = "features"
) -> OccurrenceMatrix:
    """IDF values divided by the document's size.

    ``length="features"`` divides by the number of distinct features present
    in the row; ``length="tokens"`` divides by the document's token count.
    """
    if length == "features":
        sizes = _row_feature_counts(m, vocab)
    elif length == "tokens":
        if m.n_words is None:
            raise FeatureError("token-count TFIDF needs per-document token counts")
        sizes = np.asarray(m.n_words, dtype=np.float64)
    else:
        raise ValueError(f"unknown TFIDF length mode {length!r}")
    out = idf_transform(m, vocab)
    scale = np.divide(1.0, sizes, out=np.ones_like(sizes), where=sizes > 0)
    X = sp.csr_matrix(out.X, copy=True)
    textual = vocab.textual[X.indices]
    rows = np.repeat(np.arange(X.shape[0]), np.diff(X.indptr))
    X.data = np.where(textual, X.data * scale[rows], X.data)
    return out.with_values(X)


def l2_normalize(m: OccurrenceMatrix) -> OccurrenceMatrix:
    if m.is_sparse:
        X = sp.csr_matrix(m.X, dtype=np.float64, copy=True)
        norms = np.sqrt(np.asarray(X.multiply(X).sum(axis=1)).ravel())
        scale = np.divide(1.0, norms, out=np.ones_like(norms), where=norms > 0)
        rows = np.repeat(np.arange(X.shape[0]), np.diff(X.indptr))
        X.data = X.data * scale[rows]
        return m.with_values(X)
    X = np.asarray(m.X, dtype=np.float64)
    norms = np.linalg.norm(X, axis=1)
    scale = np.divide(1.0, norms, out=np.ones_like(norms), where=norms > 0)
    return m.with_values(X * scale[:, None])


def apply_transform(
    m: OccurrenceMatrix, vocab: Vocabulary, regime: str, tfidf_length: str = "features"
) -> OccurrenceMatrix:
    """Apply one of :data:`TRANSFORMS` using training statistics in ``vocab``."""
    if regime not in TRANSFORMS:
        raise ValueError(f"unknown transform {regime!r}; expected one of {TRANSFORMS}")
    base, _, norm = regime.partition("+")
    if base == "norm":
        base, norm = "none", "norm"
    if base == "idf":
        m = idf_transform(m, vocab)
    elif base == "tfidf":
        m = tfidf_transform(m, vocab, tfidf_length)
    if norm:
        m = l2_normalize(m)
    return m


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # K x k, orthonormal columns
    explained_variance: np.ndarray

    @property
    def k(self) -> int:
        return self.components.shape[1]

    def to_json(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "components": self.components.tolist(),
            "explained_variance": self.explained_variance.tolist(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "PcaModel":
        return cls(
            mean=np.asarray(data["mean"], dtype=np.float64),
            components=np.asarray(data["components"], dtype=np.float64),
            explained_variance=np.asarray(data["explained_variance"], dtype=np.float64),
        )


def _as_values(m):
    return m.X if isinstance(m, OccurrenceMatrix) else m


def _fix_signs(V: np.ndarray) -> np.ndarray:
    pivots = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[pivots, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def _complete_basis(V: np.ndarray, K: int, k: int) -> np.ndarray:
    """Extend orthonormal columns ``V`` to ``k`` columns, deterministically."""
    cols = [V[:, j] for j in range(V.shape[1])]
    for e in range(K):
        if len(cols) == k:
            break
        v = np.zeros(K)
        v[e] = 1.0
        for _ in range(2):
            for c in cols:
                v -= (c @ v) * c
        norm = np.linalg.norm(v)
        if norm > 1e-6:
            cols.append(v / norm)
    return np.column_stack(cols)


def pca_fit(m, k: int, method: str = "auto") -> PcaModel:
    """Principal components of the mean-centred rows of ``m``.

    ``method="svd"`` runs a thin SVD of the dense centred matrix;
    ``method="gram"`` eigendecomposes the N x N centred Gram matrix, which is
    cheaper for sparse inputs with N much smaller than K.  ``"auto"`` picks the
    Gram route for sparse inputs with N < K.
    """
    X = _as_values(m)
    N, K = X.shape
    if not 1 <= k <= min(N - 1, K):
        raise FeatureError(f"k={k} outside [1, min(N-1, K)] = [1, {min(N - 1, K)}]")
    if method == "auto":
        method = "gram" if sp.issparse(X) and N < K else "svd"
    mean = np.asarray(X.mean(axis=0)).ravel()

    if method == "svd":
        Xc = (X.toarray() if sp.issparse(X) else np.asarray(X, dtype=np.float64)) - mean
        _, s, Vt = scipy.linalg.svd(Xc, full_matrices=False, lapack_driver="gesdd")
        var = s**2 / (N - 1)
        V = Vt.T
        tol = max(N, K) * np.finfo(float).eps * (s[0] if s.size else 0.0)
        rank = int(np.sum(s > tol))
        V = V[:, : min(k, rank)]
    elif method == "gram":
        if sp.issparse(X):
            G = (X @ X.T).toarray()
        else:
            X = np.asarray(X, dtype=np.float64)
            G = X @ X.T
        r = G.mean(axis=1)
        Gc = G - r[:, None] - r[None, :] + G.mean()
        lam, U = scipy.linalg.eigh(Gc)
        lam, U = lam[::-1], U[:, ::-1]
        lam = np.clip(lam, 0.0, None)
        var = lam / (N - 1)
        tol = N * np.finfo(float).eps * max(lam[0], 0.0) * 10
        rank = int(np.sum(lam > tol))
        use = min(k, rank)
        s = np.sqrt(lam[:use])
        Uk = U[:, :use]
        XtU = np.asarray(X.T @ Uk) - np.outer(mean, Uk.sum(axis=0))
        V = XtU / s
    else:
        raise ValueError(f"unknown PCA method {method!r}")

    if V.shape[1] < k:
        V = _complete_basis(V, K, k)
    var = np.concatenate([var, np.zeros(max(0, k - len(var)))])[:k]
    return PcaModel(mean=mean, components=_fix_signs(V), explained_variance=var)


def pca_project(model: PcaModel, m) -> OccurrenceMatrix | np.ndarray:
    """Dense projection ``(row - mean) @ components``."""
    X = _as_values(m)
    if X.shape[1] != model.components.shape[0]:
        raise FeatureError(
            f"matrix has {X.shape[1]} columns, PCA model expects {model.components.shape[0]}"
        )
    Z = np.asarray(X @ model.components) - model.mean @ model.components
    if isinstance(m, OccurrenceMatrix):
        return m.with_values(Z)
    return Z


def write_triplets(m: OccurrenceMatrix, path) -> None:
    """Sparse triplet CSV: row,col,value (nonzero cells only)."""
    X = sp.coo_matrix(m.X)
    order = np.lexsort((X.col, X.row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("row,col,value\n")
        for r, c, v in zip(X.row[order], X.col[order], X.data[order]):
            if v != 0:
                fh.write(f"{r},{c},{float(v)!r}\n")


def write_vocabulary(vocab: Vocabulary, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("feature\tindex\tc_i\n")
        for i, (f, c) in enumerate(zip(vocab.features, vocab.doc_counts)):
            fh.write(f"{f}\t{i}\t{int(c)}\n")
