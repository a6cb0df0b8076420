"""Dictionary-based entity counts and externally produced count columns."""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import Document, fold_ascii
from .features import OccurrenceMatrix, Vocabulary

_WORD_RE = re.compile(r"[a-z0-9]+")


class NerError(ValueError):
    pass


def _words(text: str) -> list[str]:
    return _WORD_RE.findall(fold_ascii(text).lower())


@dataclass(frozen=True)
class Dictionary:
    tool_id: str
    terms: frozenset[str]
    _max_len: int = field(init=False, repr=False, compare=False)
    _phrases: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.terms:
            raise NerError(f"dictionary {self.tool_id!r} has no terms")
        phrases = frozenset(tuple(_words(t)) for t in self.terms)
        if () in phrases:
            raise NerError(f"dictionary {self.tool_id!r} has a term without word characters")
        object.__setattr__(self, "_phrases", phrases)
        object.__setattr__(self, "_max_len", max(len(p) for p in phrases))

    @classmethod
    def from_terms(cls, tool_id: str, terms) -> "Dictionary":
        folded = {t.strip().casefold() for t in terms if t.strip()}
        return cls(tool_id, frozenset(folded))


def load_dictionary(path, tool_id: str | None = None) -> Dictionary:
    """One term per line; blank lines and ``#`` comments are skipped."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        terms = [ln.strip() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    return Dictionary.from_terms(tool_id or path.stem, terms)


def match_spans(dictionary: Dictionary, text: str) -> list[tuple[int, int]]:
    """Non-overlapping (start, end) word spans, longest match first, left to right."""
    words = _words(text)
    spans = []
    i = 0
    while i < len(words):
        for n in range(min(dictionary._max_len, len(words) - i), 0, -1):
            if tuple(words[i : i + n]) in dictionary._phrases:
                spans.append((i, i + n))
                i += n
                break
        else:
            i += 1
    return spans


def _doc_text(doc) -> str:
    if isinstance(doc, Document):
        return f"{doc.title}\n{doc.abstract_text}"
    return str(doc)


def count_matches(dictionary: Dictionary, doc, distinct: bool = False) -> int:
    """Occurrences of dictionary terms in the title and abstract.

    With ``distinct=True`` each term is counted once per document.
    """
    text = _doc_text(doc)
    spans = match_spans(dictionary, text)
    if not distinct:
        return len(spans)
    words = _words(text)
    return len({tuple(words[a:b]) for a, b in spans})


@dataclass(frozen=True)
class NerCounts:
    """Per-document counts, one column per tool, rows keyed by document id."""

    tool_ids: tuple[str, ...]
    counts: dict[str, np.ndarray]

    def __post_init__(self):
        for doc_id, row in self.counts.items():
            if len(row) != len(self.tool_ids):
                raise NerError(f"document {doc_id!r} has {len(row)} counts for {len(self.tool_ids)} tools")
            if np.any(np.asarray(row) < 0):
                raise NerError(f"document {doc_id!r} has a negative count")

    def matrix(self, ids: Sequence[str], tools: Sequence[str] | None = None) -> np.ndarray:
        tools = self.tool_ids if tools is None else tuple(tools)
        cols = [self.tool_ids.index(t) for t in tools]
        missing = [i for i in ids if i not in self.counts]
        if missing:
            raise NerError(f"no NER counts for documents {missing[:5]}")
        out = np.zeros((len(ids), len(cols)))
        for r, doc_id in enumerate(ids):
            out[r] = np.asarray(self.counts[doc_id], dtype=np.float64)[cols]
        return out

    def select(self, tools: Sequence[str]) -> "NerCounts":
        cols = [self.tool_ids.index(t) for t in tools]
        return NerCounts(tuple(tools), {k: np.asarray(v)[cols] for k, v in self.counts.items()})

    @staticmethod
    def combine(columns: Sequence["NerCounts"]) -> "NerCounts":
        if not columns:
            return NerCounts((), {})
        ids = set(columns[0].counts)
        for c in columns[1:]:
            if set(c.counts) != ids:
                raise NerError("NER count columns cover different documents")
        tools = tuple(t for c in columns for t in c.tool_ids)
        if len(set(tools)) != len(tools):
            raise NerError(f"duplicate NER tool ids in {tools}")
        return NerCounts(
            tools,
            {i: np.concatenate([np.asarray(c.counts[i]) for c in columns]) for i in ids},
        )


def dictionary_counts(dictionary: Dictionary, docs: Sequence[Document], distinct: bool = False) -> NerCounts:
    return NerCounts(
        (dictionary.tool_id,),
        {d.id: np.array([count_matches(dictionary, d, distinct)]) for d in docs},
    )


def load_external_counts(path, tool_id: str, corpus_ids: Sequence[str] | None = None) -> NerCounts:
    """Read a ``doc_id,count`` CSV.

    When ``corpus_ids`` is given every corpus document must be present and no
    unknown ids are allowed.
    """
    counts: dict[str, np.ndarray] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or (lineno == 1 and row[0].strip().lower() == "doc_id"):
                continue
            if len(row) != 2:
                raise NerError(f"{path}:{lineno}: expected 'doc_id,count'")
            doc_id, raw = row[0].strip(), row[1].strip()
            try:
                value = int(raw)
            except ValueError:
                raise NerError(f"{path}:{lineno}: count {raw!r} is not an integer") from None
            if value < 0:
                raise NerError(f"{path}:{lineno}: negative count {value}")
            if doc_id in counts:
                raise NerError(f"{path}:{lineno}: duplicate doc id {doc_id!r}")
            counts[doc_id] = np.array([value])
    if corpus_ids is not None:
        known = set(corpus_ids)
        unknown = sorted(set(counts) - known)
        if unknown:
            raise NerError(f"{path}: unknown doc ids {unknown[:5]}")
        missing = [i for i in corpus_ids if i not in counts]
        if missing:
            raise NerError(f"{path}: missing doc ids {missing[:5]}")
        counts = {i: counts[i] for i in corpus_ids}
    return NerCounts((tool_id,), counts)


def write_counts(counts: NerCounts, ids: Sequence[str], path) -> None:
    if len(counts.tool_ids) != 1:
        raise NerError("the doc_id,count format holds a single tool")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["doc_id", "count"])
        for i in ids:
            w.writerow([i, int(counts.counts[i][0])])


def append_ner_features(
    m: OccurrenceMatrix,
    counts: NerCounts,
    tools: Sequence[str] = (),
    vocab: Vocabulary | None = None,
):
    """Append raw count columns for ``tools``; returns ``(matrix, vocab)``.

    ``vocab`` is extended with NerCount entries when given.
    """
    tools = tuple(tools)
    if not tools:
        return m, vocab
    C = counts.matrix(m.ids, tools)
    if m.is_sparse:
        X = sp.hstack([m.X, sp.csr_matrix(C)], format="csr")
    else:
        X = np.hstack([np.asarray(m.X), C])
    return m.with_values(X), (vocab.with_ner(tools) if vocab is not None else None)
