"""Synthetic labelled corpora with planted discriminative words.

Generated words are consonant-vowel syllables closed by a final ``k``, so
they contain no digits, are at least three letters long and are left
untouched by the stemmer; each generated word becomes exactly one feature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Document, Label

_CONSONANTS = "bdfghjlmnprstvz"
_VOWELS = "aeiou"
_SYLLABLES = [c + v for c in _CONSONANTS for v in _VOWELS]


def synthetic_word(index: int) -> str:
    """Bijective map from nonnegative integers to stemmer-stable words."""
    if index < 0:
        raise ValueError("index must be nonnegative")
    base = len(_SYLLABLES)
    parts = [_SYLLABLES[index % base]]
    index //= base
    while index:
        index -= 1
        parts.append(_SYLLABLES[index % base])
        index //= base
    return "".join(reversed(parts)) + "k"


@dataclass(frozen=True)
class SyntheticConfig:
    n_docs: int = 1213
    n_relevant: int | None = None  # default: half, rounded up
    vocab_size: int = 5000
    n_planted: int = 20
    rate_relevant: float = 0.5
    rate_irrelevant: float = 0.1
    signal: float = 1.0
    mean_length: float = 80.0
    length_sigma: float = 0.8  # lognormal shape; 0 gives constant lengths
    zipf_exponent: float = 1.0  # background word frequency ~ rank**-s; 0 is uniform
    min_length: int = 5
    title_words: int = 6
    seed: int = 0

    def __post_init__(self):
        if self.n_docs < 2:
            raise ValueError("n_docs must be at least 2")
        if not 0 <= self.n_planted <= self.vocab_size:
            raise ValueError("n_planted must lie in [0, vocab_size]")
        if self.zipf_exponent < 0:
            raise ValueError("zipf_exponent must be nonnegative")
        if not 0 <= self.signal <= 1:
            raise ValueError("signal must lie in [0, 1]")
        for r in (self.rate_relevant, self.rate_irrelevant):
            if not 0 <= r <= 1:
                raise ValueError("occurrence rates must lie in [0, 1]")

    @property
    def planted_rates(self) -> tuple[float, float]:
        """(relevant, irrelevant) occurrence rates after scaling by ``signal``."""
        lo = self.rate_irrelevant
        return lo + self.signal * (self.rate_relevant - lo), lo


@dataclass(frozen=True)
class SyntheticCorpus:
    documents: list[Document]
    planted: tuple[str, ...]
    config: SyntheticConfig


def generate(config: SyntheticConfig | None = None, **overrides) -> SyntheticCorpus:
    """Draw a corpus.

    Every planted word appears independently per document with its class's
    rate.  Background words are drawn with Zipfian frequencies over a
    randomly permuted rank order.
    """
    if config is None:
        config = SyntheticConfig(**overrides)
    elif overrides:
        raise TypeError("pass either a config or keyword overrides")
    rng = np.random.default_rng(config.seed)
    words = [synthetic_word(i) for i in range(config.vocab_size)]
    planted = words[: config.n_planted]
    background = np.array(words[config.n_planted :])
    if background.size == 0:
        raise ValueError("vocabulary has no background words")

    n_pos = (config.n_docs + 1) // 2 if config.n_relevant is None else config.n_relevant
    if not 0 <= n_pos <= config.n_docs:
        raise ValueError("n_relevant must lie in [0, n_docs]")
    labels = np.array([1] * n_pos + [0] * (config.n_docs - n_pos))
    rng.shuffle(labels)
    rate_pos, rate_neg = config.planted_rates
    width = len(str(config.n_docs))
    weights = np.arange(1, background.size + 1, dtype=np.float64) ** -config.zipf_exponent
    weights = weights[rng.permutation(background.size)]
    cdf = np.cumsum(weights / weights.sum())

    docs = []
    for r, y in enumerate(labels):
        if config.length_sigma > 0:
            length = rng.lognormal(np.log(config.mean_length) - config.length_sigma**2 / 2, config.length_sigma)
        else:
            length = config.mean_length
        length = max(config.min_length, int(round(length)))
        draws = np.minimum(np.searchsorted(cdf, rng.random(length), side="right"), background.size - 1)
        body = list(background[draws])
        present = rng.random(config.n_planted) < (rate_pos if y else rate_neg)
        for i in np.flatnonzero(present):
            body.insert(int(rng.integers(0, len(body) + 1)), planted[i])
        cut = min(config.title_words, len(body) // 2)
        docs.append(
            Document(
                id=f"S{r:0{width}d}",
                label=Label.RELEVANT if y else Label.IRRELEVANT,
                title=" ".join(body[:cut]),
                abstract_text=" ".join(body[cut:]),
            )
        )
    return SyntheticCorpus(documents=docs, planted=tuple(planted), config=config)
