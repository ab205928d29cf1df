"""BM25 scoring, inverted index and top-n candidate retrieval."""

from __future__ import annotations

import json
import zlib
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .text import DEFAULT_TOKENIZER, CorpusStats, TokenizerConfig, build_stats, idf, term_set, tokenize

INDEX_FORMAT = b"ROCC-INDEX/1\n"


@dataclass(frozen=True)
class Sentence:
    idx: int
    text: str
    tokens: tuple[str, ...]
    terms: frozenset[str]

    @property
    def len(self) -> int:
        return len(self.tokens)

    @classmethod
    def from_text(cls, idx: int, text: str, cfg: TokenizerConfig = DEFAULT_TOKENIZER) -> "Sentence":
        tokens = tuple(tokenize(text, cfg))
        return cls(idx, text, tokens, term_set(tokens))


def make_sentences(texts: Iterable[str], cfg: TokenizerConfig = DEFAULT_TOKENIZER) -> list[Sentence]:
    return [Sentence.from_text(i, t, cfg) for i, t in enumerate(texts)]


@dataclass(frozen=True)
class Query:
    q_terms: frozenset[str]
    a_terms: frozenset[str]
    all_tokens: tuple[str, ...]

    def unique_tokens(self) -> list[str]:
        """Query terms in first-occurrence order."""
        return list(dict.fromkeys(self.all_tokens))


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.2
    b: float = 0.75
    # False weights each query term by its multiplicity in the question+answer text.
    unique_query_terms: bool = True

    def __post_init__(self):
        if self.k1 < 0:
            raise ValueError("k1 must be >= 0")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError("b must lie in [0, 1]")

    def to_dict(self) -> dict:
        return {"k1": self.k1, "b": self.b, "unique_query_terms": self.unique_query_terms}


def form_query(question: str, answer: str, cfg: TokenizerConfig = DEFAULT_TOKENIZER) -> Query:
    if not question or not question.strip():
        raise ValueError("question must be non-empty")
    q_tokens = tokenize(question, cfg)
    a_tokens = tokenize(answer or "", cfg)
    return Query(term_set(q_tokens), term_set(a_tokens), tuple(q_tokens) + tuple(a_tokens))


def _query_weights(query: Query, params: Bm25Params) -> list[tuple[str, int]]:
    if params.unique_query_terms:
        return [(t, 1) for t in query.unique_tokens()]
    counts = Counter(query.all_tokens)
    return [(t, counts[t]) for t in query.unique_tokens()]


def _term_score(w: float, tf: int, length: int, stats: CorpusStats, params: Bm25Params) -> float:
    norm = params.k1 * (1.0 - params.b + params.b * length / stats.avg_len)
    return w * tf * (params.k1 + 1.0) / (tf + norm)


def bm25_score(query: Query, sent: Sentence, stats: CorpusStats, params: Bm25Params = Bm25Params()) -> float:
    tf = Counter(sent.tokens)
    score = 0.0
    for term, mult in _query_weights(query, params):
        f = tf.get(term, 0)
        if f:
            score += _term_score(mult * idf(term, stats), f, sent.len, stats, params)
    return score


class Index:
    """Inverted index over a sentence collection.

    ``postings`` maps each term to ``(sentence idx, term frequency)`` pairs
    in ascending idx order. Immutable once built.
    """

    def __init__(self, sentences: Sequence[Sentence], tokenizer: TokenizerConfig = DEFAULT_TOKENIZER):
        if not sentences:
            raise ValueError("cannot index an empty collection")
        ordered = sorted(sentences, key=lambda s: s.idx)
        seen = set()
        for s in ordered:
            if s.idx in seen:
                raise ValueError(f"duplicate sentence idx {s.idx}")
            seen.add(s.idx)
        self.sentences: tuple[Sentence, ...] = tuple(ordered)
        self.tokenizer = tokenizer
        self.stats: CorpusStats = build_stats(self.sentences)
        self._by_idx = {s.idx: s for s in self.sentences}
        postings: dict[str, list[tuple[int, int]]] = {}
        for s in self.sentences:
            for term, f in Counter(s.tokens).items():
                postings.setdefault(term, []).append((s.idx, f))
        self.postings = postings

    def __len__(self) -> int:
        return len(self.sentences)

    def sentence(self, idx: int) -> Sentence:
        return self._by_idx[idx]

    def scores(self, query: Query, params: Bm25Params = Bm25Params()) -> dict[int, float]:
        """Accumulate BM25 over postings; sentences without a query term are absent."""
        acc: dict[int, float] = {}
        stats = self.stats
        for term, mult in _query_weights(query, params):
            plist = self.postings.get(term)
            if not plist:
                continue
            w = mult * idf(term, stats)
            for sid, f in plist:
                acc[sid] = acc.get(sid, 0.0) + _term_score(w, f, self._by_idx[sid].len, stats, params)
        return acc

    # persistence ---------------------------------------------------------

    def to_bytes(self) -> bytes:
        payload = {
            "tokenizer": self.tokenizer.to_dict(),
            "sentences": [[s.idx, s.text] for s in self.sentences],
        }
        body = json.dumps(payload, ensure_ascii=False, sort_keys=True, separators=(",", ":"))
        return INDEX_FORMAT + zlib.compress(body.encode("utf-8"), 6)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Index":
        if not data.startswith(INDEX_FORMAT):
            raise ValueError("not a ROCC index file or unsupported format version")
        payload = json.loads(zlib.decompress(data[len(INDEX_FORMAT):]).decode("utf-8"))
        tk = payload["tokenizer"]
        cfg = TokenizerConfig(lowercase=tk["lowercase"], stopwords=frozenset(tk["stopwords"]),
                              min_token_len=tk["min_token_len"])
        sents = [Sentence.from_text(idx, text, cfg) for idx, text in payload["sentences"]]
        return cls(sents, cfg)

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "Index":
        return cls.from_bytes(Path(path).read_bytes())


def build_index(sentences: Sequence[Sentence], tokenizer: TokenizerConfig = DEFAULT_TOKENIZER) -> Index:
    return Index(sentences, tokenizer)


def retrieve_top_n(query: Query, index: Index, n: int = 20,
                   params: Bm25Params = Bm25Params()) -> list[tuple[Sentence, float]]:
    """Top-n sentences with positive BM25, best first, ties by ascending idx."""
    if n < 1:
        raise ValueError("n must be >= 1")
    scored = [(sid, sc) for sid, sc in index.scores(query, params).items() if sc > 0.0]
    scored.sort(key=lambda p: (-p[1], p[0]))
    return [(index.sentence(sid), sc) for sid, sc in scored[:n]]


def linear_scan_top_n(query: Query, sentences: Sequence[Sentence], stats: CorpusStats, n: int = 20,
                      params: Bm25Params = Bm25Params()) -> list[tuple[Sentence, float]]:
    """Reference retrieval scoring every sentence directly."""
    scored = [(s, bm25_score(query, s, stats, params)) for s in sentences]
    scored = [p for p in scored if p[1] > 0.0]
    scored.sort(key=lambda p: (-p[1], p[0].idx))
    return scored[:n]
