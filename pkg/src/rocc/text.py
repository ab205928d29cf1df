"""Tokenization, term sets and collection statistics."""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

# Alphanumeric runs; underscore and every other symbol split tokens.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


@dataclass(frozen=True)
class TokenizerConfig:
    lowercase: bool = True
    stopwords: frozenset[str] = frozenset()
    min_token_len: int = 1

    def __post_init__(self):
        if self.min_token_len < 1:
            raise ValueError("min_token_len must be >= 1")
        object.__setattr__(self, "stopwords", frozenset(self.stopwords))

    @classmethod
    def with_stopword_file(cls, path, **kwargs) -> "TokenizerConfig":
        return cls(stopwords=load_stopwords(path), **kwargs)

    def to_dict(self) -> dict:
        return {
            "lowercase": self.lowercase,
            "stopwords": sorted(self.stopwords),
            "min_token_len": self.min_token_len,
        }


DEFAULT_TOKENIZER = TokenizerConfig()


def load_stopwords(path) -> frozenset[str]:
    """Read a stopword list: one term per line, blank lines ignored."""
    text = Path(path).read_text(encoding="utf-8")
    return frozenset(line.strip().lower() for line in text.splitlines() if line.strip())


def tokenize(text: str, cfg: TokenizerConfig = DEFAULT_TOKENIZER) -> list[str]:
    if cfg.lowercase:
        text = text.lower()
    tokens = _TOKEN_RE.findall(text)
    if cfg.min_token_len > 1:
        tokens = [t for t in tokens if len(t) >= cfg.min_token_len]
    if cfg.stopwords:
        tokens = [t for t in tokens if t not in cfg.stopwords]
    return tokens


def term_set(tokens: Iterable[str]) -> frozenset[str]:
    return frozenset(tokens)


@dataclass(frozen=True)
class CorpusStats:
    """Document count, document frequencies and mean length of a collection.

    Every sentence counts as one document. Frozen after construction, so a
    single instance may be shared between threads and worker processes.
    """

    n_docs: int
    doc_freq: Mapping[str, int] = field(repr=False)
    avg_len: float

    def df(self, term: str) -> int:
        return self.doc_freq.get(term, 0)

    def idf(self, term: str) -> float:
        return idf(term, self)


def build_stats(token_lists: Sequence[Sequence[str]]) -> CorpusStats:
    """Collect statistics from tokenized sentences (or objects with ``.tokens``)."""
    if len(token_lists) == 0:
        raise ValueError("cannot build statistics from an empty collection")
    df: Counter[str] = Counter()
    total = 0
    for item in token_lists:
        tokens = getattr(item, "tokens", item)
        total += len(tokens)
        df.update(set(tokens))
    if total == 0:
        raise ValueError("collection contains no tokens")
    return CorpusStats(n_docs=len(token_lists), doc_freq=dict(df), avg_len=total / len(token_lists))


def idf(term: str, stats: CorpusStats) -> float:
    """BM25 inverse document frequency; unseen terms take df = 0."""
    df = stats.doc_freq.get(term, 0)
    return math.log(1.0 + (stats.n_docs - df + 0.5) / (df + 0.5))
