"""Relevance, overlap and coverage components of a justification set and their combination."""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Mapping, Sequence

import numpy as np

from .retrieval import Bm25Params, Query, Sentence, bm25_score
from .text import CorpusStats

ABLATIONS = ("no_idf", "no_c_answer", "no_c_question", "no_overlap", "r_only")


@dataclass(frozen=True)
class EmbeddingTable:
    dim: int
    vectors: Mapping[str, np.ndarray] = field(repr=False)

    def __post_init__(self):
        for term, vec in self.vectors.items():
            if len(vec) != self.dim:
                raise ValueError(f"vector for {term!r} has length {len(vec)}, expected {self.dim}")

    def __len__(self):
        return len(self.vectors)

    def __contains__(self, term):
        return term in self.vectors

    def cosine(self, a: str, b: str) -> float:
        u, v = self.vectors[a], self.vectors[b]
        nu, nv = float(np.linalg.norm(u)), float(np.linalg.norm(v))
        if nu == 0.0 or nv == 0.0:
            return 0.0
        return float(np.dot(u, v)) / (nu * nv)


class ExactMatcher:
    """Terms match only when identical."""

    name = "exact"

    def match(self, a: str, b: str) -> bool:
        return a == b

    def covered(self, x_terms, y_terms) -> frozenset[str]:
        """Members of ``x_terms`` matched by some member of ``y_terms``."""
        return frozenset(x_terms) & frozenset(y_terms)

    def to_dict(self) -> dict:
        return {"kind": self.name}


class AlignmentMatcher:
    """Terms match when identical or when their embedding cosine exceeds ``threshold``.

    Pairs where either term lacks a vector fall back to string equality.
    """

    name = "alignment"

    def __init__(self, embeddings: EmbeddingTable, threshold: float = 0.95):
        self.embeddings = embeddings
        self.threshold = threshold
        self._unit: dict[str, np.ndarray] = {}

    def _unit_vec(self, term):
        u = self._unit.get(term)
        if u is None:
            v = np.asarray(self.embeddings.vectors[term], dtype=np.float64)
            norm = np.linalg.norm(v)
            u = v / norm if norm > 0 else np.zeros_like(v)
            self._unit[term] = u
        return u

    def match(self, a: str, b: str) -> bool:
        if a == b:
            return True
        if a in self.embeddings and b in self.embeddings:
            return float(self._unit_vec(a) @ self._unit_vec(b)) > self.threshold
        return False

    def covered(self, x_terms, y_terms) -> frozenset[str]:
        x_terms, y_terms = frozenset(x_terms), frozenset(y_terms)
        hit = set(x_terms & y_terms)
        y_vec = sorted(t for t in y_terms if t in self.embeddings)
        rest = sorted(t for t in x_terms - hit if t in self.embeddings)
        if y_vec and rest:
            ym = np.stack([self._unit_vec(t) for t in y_vec])
            xm = np.stack([self._unit_vec(t) for t in rest])
            sims = xm @ ym.T
            for t, row in zip(rest, sims):
                if np.any(row > self.threshold):
                    hit.add(t)
        return frozenset(hit)

    def to_dict(self) -> dict:
        return {"kind": self.name, "threshold": self.threshold, "vocab": len(self.embeddings),
                "dim": self.embeddings.dim}


@dataclass(frozen=True)
class Ablation:
    no_idf: bool = False
    no_c_answer: bool = False
    no_c_question: bool = False
    no_overlap: bool = False
    r_only: bool = False

    @classmethod
    def from_names(cls, names) -> "Ablation":
        names = set(names or ())
        unknown = names - set(ABLATIONS) - {"full", "none"}
        if unknown:
            raise ValueError(f"unknown ablation(s): {', '.join(sorted(unknown))}")
        return cls(**{n: n in names for n in ABLATIONS})

    def names(self) -> list[str]:
        return [f.name for f in fields(self) if getattr(self, f.name)]


@dataclass(frozen=True)
class RoccConfig:
    epsilon: float = 1.0
    ablation: Ablation = Ablation()
    matcher: ExactMatcher | AlignmentMatcher = field(default_factory=ExactMatcher)
    # False averages the two directions of each pair, giving O in [0, 1].
    ordered_pairs: bool = True

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon, "ablation": self.ablation.names(),
                "matcher": self.matcher.to_dict(), "ordered_pairs": self.ordered_pairs}


@dataclass(frozen=True)
class ScoreBreakdown:
    r: float
    o: float
    c_q: float
    c_a: float
    s: float

    def to_dict(self) -> dict:
        return {"R": self.r, "O": self.o, "C_Q": self.c_q, "C_A": self.c_a, "S": self.s}


def combine(r: float, o: float, c_q: float, c_a: float, epsilon: float, ablation: Ablation) -> float:
    """R / (eps + O) * (eps + C(A)) * (eps + C(Q)), dropping ablated factors."""
    if ablation.r_only:
        return r
    s = r if ablation.no_overlap else r / (epsilon + o)
    if not ablation.no_c_answer:
        s *= epsilon + c_a
    if not ablation.no_c_question:
        s *= epsilon + c_q
    return s


def _by_idx(sents: Sequence[Sentence]) -> list[Sentence]:
    return sorted(sents, key=lambda s: s.idx)


def relevance(sents: Sequence[Sentence], query: Query, stats: CorpusStats,
              params: Bm25Params = Bm25Params()) -> float:
    if not sents:
        raise ValueError("relevance of an empty set is undefined")
    total = 0.0
    for s in _by_idx(sents):
        total += bm25_score(query, s, stats, params)
    return total / len(sents)


def pair_overlap(a: Sentence, b: Sentence, matcher=None) -> float:
    """|t(a) matched in t(b)| / max(|t(a)|, |t(b)|); 0 for two empty sentences."""
    denom = max(len(a.terms), len(b.terms))
    if denom == 0:
        return 0.0
    matcher = matcher or ExactMatcher()
    return len(matcher.covered(a.terms, b.terms)) / denom


def overlap(sents: Sequence[Sentence], cfg: RoccConfig = RoccConfig()) -> float:
    k = len(sents)
    if k < 2:
        return 0.0
    ordered = _by_idx(sents)
    total = 0.0
    for j in range(1, k):
        inner = 0.0
        for i in range(j):
            inner += pair_overlap(ordered[i], ordered[j], cfg.matcher) + pair_overlap(ordered[j], ordered[i], cfg.matcher)
        total += inner
    if not cfg.ordered_pairs:
        total /= 2.0
    return total / (k * (k - 1) / 2)


def covered_terms(x_terms, sents: Sequence[Sentence], cfg: RoccConfig = RoccConfig()) -> frozenset[str]:
    out: set[str] = set()
    for s in sents:
        out |= cfg.matcher.covered(x_terms, s.terms)
    return frozenset(out)


def coverage(x_terms, sents: Sequence[Sentence], stats: CorpusStats, cfg: RoccConfig = RoccConfig()) -> float:
    """IDF-weighted share of ``x_terms`` covered by the set (uniform weights under no_idf)."""
    if not x_terms:
        return 0.0
    total = 0.0
    for t in sorted(covered_terms(x_terms, sents, cfg)):
        total += 1.0 if cfg.ablation.no_idf else stats.idf(t)
    return total / len(x_terms)


def rocc_score(sents: Sequence[Sentence], query: Query, stats: CorpusStats,
               params: Bm25Params = Bm25Params(), cfg: RoccConfig = RoccConfig()) -> ScoreBreakdown:
    if not sents:
        raise ValueError("cannot score an empty justification set")
    r = relevance(sents, query, stats, params)
    o = overlap(sents, cfg)
    c_q = coverage(query.q_terms, sents, stats, cfg)
    c_a = coverage(query.a_terms, sents, stats, cfg)
    return ScoreBreakdown(r, o, c_q, c_a, combine(r, o, c_q, c_a, cfg.epsilon, cfg.ablation))
