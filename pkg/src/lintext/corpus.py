"""Labeled abstract records and their conversion to token streams."""

from __future__ import annotations

import enum
import json
import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .porter import porter_stem

MESH_PREFIX = "MeSH:"
AUTHOR_PREFIX = "AU:"
NUMBER_TOKEN = "#"
MIN_TOKEN_LENGTH = 2

# Alphabetic runs and digit runs are separate tokens, so "cyp3a4" yields
# "cyp", "#", "a", "#" before the length filter.
_TOKEN_RE = re.compile(r"[a-z]+|[0-9]+")


class CorpusError(ValueError):
    """Raised for malformed or inconsistent corpus files."""


class Label(enum.Enum):
    RELEVANT = "Relevant"
    IRRELEVANT = "Irrelevant"

    @classmethod
    def parse(cls, value) -> "Label":
        if isinstance(value, Label):
            return value
        if isinstance(value, bool):
            return cls.RELEVANT if value else cls.IRRELEVANT
        if isinstance(value, int) and value in (0, 1):
            return cls.RELEVANT if value == 1 else cls.IRRELEVANT
        if isinstance(value, str):
            for member in cls:
                if value.strip().lower() == member.value.lower():
                    return member
        raise ValueError(f"unrecognised label {value!r}")

    @property
    def y(self) -> int:
        return 1 if self is Label.RELEVANT else 0


@dataclass(frozen=True)
class Document:
    id: str
    label: Label
    title: str
    abstract_text: str = ""
    authors: tuple[str, ...] = ()
    journal: str = ""
    mesh_terms: tuple[str, ...] = ()
    rn_codes: tuple[str, ...] = ()
    si_codes: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "label": self.label.value,
            "title": self.title,
            "abstract_text": self.abstract_text,
            "authors": list(self.authors),
            "journal": self.journal,
            "mesh_terms": list(self.mesh_terms),
            "rn_codes": list(self.rn_codes),
            "si_codes": list(self.si_codes),
        }


@dataclass(frozen=True)
class TokenizedDocument:
    """Token streams of one document.

    ``segments`` holds one tuple of stemmed tokens per field value (title,
    abstract, journal, each RN code, each SI code).  Bigrams are formed only
    inside a segment.
    """

    id: str
    label: Label
    segments: tuple[tuple[str, ...], ...]
    mesh_tokens: tuple[str, ...] = ()
    author_tokens: tuple[str, ...] = ()
    n_words: int = field(default=0, compare=False)

    @property
    def tokens(self) -> list[str]:
        return [tok for seg in self.segments for tok in seg]

    def unigrams(self) -> set[str]:
        feats = set(self.tokens)
        feats.update(self.mesh_tokens)
        feats.update(self.author_tokens)
        return feats

    def bigrams(self) -> set[str]:
        return {
            f"{a} {b}" for seg in self.segments for a, b in zip(seg, seg[1:])
        }

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "label": self.label.value,
            "segments": [list(s) for s in self.segments],
            "mesh_tokens": list(self.mesh_tokens),
            "author_tokens": list(self.author_tokens),
        }

    @classmethod
    def from_json(cls, record: dict) -> "TokenizedDocument":
        segments = tuple(tuple(s) for s in record["segments"])
        return cls(
            id=record["id"],
            label=Label.parse(record["label"]),
            segments=segments,
            mesh_tokens=tuple(record.get("mesh_tokens", ())),
            author_tokens=tuple(record.get("author_tokens", ())),
            n_words=sum(len(s) for s in segments),
        )


_REQUIRED = ("id", "label", "title")
_LIST_FIELDS = ("authors", "mesh_terms", "rn_codes", "si_codes")


def _document_from_record(record: dict, lineno: int) -> Document:
    if not isinstance(record, dict):
        raise CorpusError(f"line {lineno}: expected a JSON object")
    for name in _REQUIRED:
        if name not in record or record[name] is None:
            raise CorpusError(f"line {lineno}: missing field {name!r}")
    doc_id = str(record["id"])
    if not doc_id:
        raise CorpusError(f"line {lineno}: empty 'id'")
    try:
        label = Label.parse(record["label"])
    except ValueError as exc:
        raise CorpusError(f"line {lineno}: {exc}") from None
    lists = {}
    for name in _LIST_FIELDS:
        value = record.get(name) or []
        if isinstance(value, str):
            value = [value]
        lists[name] = tuple(str(v) for v in value)
    return Document(
        id=doc_id,
        label=label,
        title=str(record["title"]),
        abstract_text=str(record.get("abstract_text") or ""),
        journal=str(record.get("journal") or ""),
        **lists,
    )


def load_corpus(path, format: str = "jsonl") -> list[Document]:
    """Read a JSON Lines corpus, one document per line, in file order."""
    if format.lower() not in ("jsonl", "jsonlines"):
        raise ValueError(f"unsupported corpus format {format!r}")
    docs: list[Document] = []
    seen: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {lineno}: invalid JSON ({exc.msg})") from None
            doc = _document_from_record(record, lineno)
            if doc.id in seen:
                raise CorpusError(
                    f"line {lineno}: duplicate id {doc.id!r} (first seen on line {seen[doc.id]})"
                )
            seen[doc.id] = lineno
            docs.append(doc)
    return docs


def write_corpus(docs: Iterable[Document], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(doc.to_json(), ensure_ascii=False) + "\n")


def fold_ascii(text: str) -> str:
    """Strip accents; characters with no ASCII form become spaces."""
    decomposed = unicodedata.normalize("NFKD", text)
    out = []
    for ch in decomposed:
        if ord(ch) < 128:
            out.append(ch)
        elif unicodedata.combining(ch):
            continue
        else:
            out.append(" ")
    return "".join(out)


def text_tokens(text: str, stem: bool = True) -> list[str]:
    """Lowercased, number-masked, length-filtered tokens of free text."""
    out = []
    for raw in _TOKEN_RE.findall(fold_ascii(text).lower()):
        if raw[0].isdigit():
            out.append(NUMBER_TOKEN)
            continue
        tok = porter_stem(raw) if stem else raw
        if len(tok) >= MIN_TOKEN_LENGTH:
            out.append(tok)
    return out


def _author_token(name: str) -> str | None:
    words = [NUMBER_TOKEN if w[0].isdigit() else w for w in _TOKEN_RE.findall(fold_ascii(name).lower())]
    if not words:
        return None
    return AUTHOR_PREFIX + " ".join(words)


def tokenize(doc: Document) -> TokenizedDocument:
    segments = [text_tokens(doc.title), text_tokens(doc.abstract_text), text_tokens(doc.journal)]
    segments.extend(text_tokens(code) for code in doc.rn_codes)
    segments.extend(text_tokens(code) for code in doc.si_codes)
    segments = tuple(tuple(s) for s in segments if s)

    mesh = []
    for term in doc.mesh_terms:
        term = term.strip()
        if term and (MESH_PREFIX + term) not in mesh:
            mesh.append(MESH_PREFIX + term)
    authors = []
    for name in doc.authors:
        tok = _author_token(name)
        if tok is not None and tok not in authors:
            authors.append(tok)

    return TokenizedDocument(
        id=doc.id,
        label=doc.label,
        segments=segments,
        mesh_tokens=tuple(mesh),
        author_tokens=tuple(authors),
        n_words=sum(len(s) for s in segments),
    )


def tokenize_corpus(docs: Sequence[Document]) -> list[TokenizedDocument]:
    return [tokenize(d) for d in docs]


def class_counts(docs: Iterable) -> tuple[int, int]:
    """(relevant, irrelevant) counts."""
    pos = neg = 0
    for d in docs:
        if d.label is Label.RELEVANT:
            pos += 1
        else:
            neg += 1
    return pos, neg


def write_tokens(docs: Iterable[TokenizedDocument], path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(doc.to_json(), ensure_ascii=False) + "\n")


def read_tokens(path) -> list[TokenizedDocument]:
    with open(path, encoding="utf-8") as fh:
        return [TokenizedDocument.from_json(json.loads(line)) for line in fh if line.strip()]
