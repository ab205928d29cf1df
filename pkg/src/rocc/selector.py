"""Enumeration, ranking and selection of candidate justification sets.

The exhaustive search runs in the compiled ``_kernel`` extension when it is
importable and in ``_pykernel`` otherwise; set ``ROCC_PURE_PYTHON=1`` to force
the fallback. Both produce identical output.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from . import _pykernel
from .retrieval import Bm25Params, Query, Sentence, bm25_score
from .scoring import RoccConfig, ScoreBreakdown, pair_overlap, rocc_score
from .text import CorpusStats

try:
    from . import _kernel as _compiled
except ImportError:  # extension not built
    _compiled = None

TIE_RTOL = 1e-12


def available_backends() -> list[str]:
    return (["cython"] if _compiled is not None else []) + ["python"]


def default_backend() -> str:
    if _compiled is None or os.environ.get("ROCC_PURE_PYTHON", "").strip() not in ("", "0"):
        return "python"
    return "cython"


def _search_fn(backend: str | None):
    backend = backend or default_backend()
    if backend == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernel is not available; rebuild the package")
        return _compiled.search
    if backend == "python":
        return _pykernel.search
    raise ValueError(f"unknown backend {backend!r}")


class InsufficientCandidates(ValueError):
    pass


@dataclass(frozen=True)
class JustificationSet:
    member_idxs: tuple[int, ...]
    breakdown: ScoreBreakdown

    @property
    def k(self) -> int:
        return len(self.member_idxs)

    @property
    def score(self) -> float:
        return self.breakdown.s

    def to_dict(self) -> dict:
        return {"member_idxs": list(self.member_idxs), "k": self.k, "breakdown": self.breakdown.to_dict()}


@dataclass(frozen=True)
class SelectionConfig:
    n: int = 20
    k_values: tuple[int, ...] = (3,)
    auto: bool = False
    reorder_by_index: bool = True
    allow_singletons: bool = False
    top_m: int = 1
    # None keeps the exhaustive search; an int switches to approximate beam search.
    beam_width: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "k_values", tuple(sorted(set(int(k) for k in self.k_values))))
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.k_values:
            raise ValueError("at least one k is required")
        lo = 1 if self.allow_singletons else 2
        for k in self.k_values:
            if not lo <= k <= self.n:
                raise ValueError(f"k={k} outside [{lo}, n={self.n}]")
        if not self.auto and len(self.k_values) != 1:
            raise ValueError("parametric selection takes exactly one k")
        if self.top_m < 1:
            raise ValueError("top_m must be >= 1")
        if self.beam_width is not None and self.beam_width < 1:
            raise ValueError("beam_width must be >= 1")

    @classmethod
    def parametric(cls, k: int, **kw) -> "SelectionConfig":
        return cls(k_values=(k,), auto=False, **kw)

    @classmethod
    def autorocc(cls, k_values, **kw) -> "SelectionConfig":
        return cls(k_values=tuple(k_values), auto=True, **kw)

    def to_dict(self) -> dict:
        return {"n": self.n, "k_values": list(self.k_values), "auto": self.auto,
                "reorder_by_index": self.reorder_by_index, "allow_singletons": self.allow_singletons,
                "top_m": self.top_m, "beam_width": self.beam_width}


def enumerate_sets(candidates: Sequence[Sentence], k: int) -> Iterator[tuple[int, ...]]:
    """All k-subsets of candidate idxs, lexicographic."""
    if k < 0 or k > len(candidates):
        raise InsufficientCandidates(f"k={k} exceeds the {len(candidates)} candidates")
    idxs = sorted(s.idx for s in candidates)
    return itertools.combinations(idxs, k)


def count_sets(n: int, k_values) -> int:
    return sum(math.comb(n, k) for k in set(k_values))


@dataclass
class SetProblem:
    """Per-question arrays consumed by the search kernels.

    Candidates are ordered by idx; every array is indexed by that position.
    """

    candidates: list[Sentence]
    bm25: np.ndarray
    pair: np.ndarray
    qmask: np.ndarray
    amask: np.ndarray
    q_weights: np.ndarray
    a_weights: np.ndarray
    nq: int
    na: int
    flags: int
    epsilon: float
    q_terms: list[str] = field(default_factory=list)
    a_terms: list[str] = field(default_factory=list)


def _term_masks(x_terms: list[str], candidates, matcher) -> np.ndarray:
    words = max(1, (len(x_terms) + 63) // 64)
    pos = {t: i for i, t in enumerate(x_terms)}
    out = np.zeros((len(candidates), words), dtype=np.uint64)
    for row, s in enumerate(candidates):
        for t in matcher.covered(x_terms, s.terms):
            i = pos[t]
            out[row, i // 64] |= np.uint64(1) << np.uint64(i % 64)
    return out


def _weights(x_terms: list[str], stats: CorpusStats, no_idf: bool) -> np.ndarray:
    w = np.zeros(max(64, ((len(x_terms) + 63) // 64) * 64), dtype=np.float64)
    for i, t in enumerate(x_terms):
        w[i] = 1.0 if no_idf else stats.idf(t)
    return w


def prepare(query: Query, candidates: Sequence[Sentence], stats: CorpusStats,
            params: Bm25Params = Bm25Params(), cfg: RoccConfig = RoccConfig()) -> SetProblem:
    cands = sorted(candidates, key=lambda s: s.idx)
    if len({s.idx for s in cands}) != len(cands):
        raise ValueError("candidate idxs must be unique")
    n = len(cands)
    bm = np.array([bm25_score(query, s, stats, params) for s in cands], dtype=np.float64)
    pair = np.zeros((n, n), dtype=np.float64)
    m = cfg.matcher
    for i in range(n):
        for j in range(i + 1, n):
            v = pair_overlap(cands[i], cands[j], m) + pair_overlap(cands[j], cands[i], m)
            if not cfg.ordered_pairs:
                v /= 2.0
            pair[i, j] = pair[j, i] = v
    q_terms = sorted(query.q_terms)
    a_terms = sorted(query.a_terms)
    ab = cfg.ablation
    flags = ((_pykernel.R_ONLY if ab.r_only else 0) | (_pykernel.NO_OVERLAP if ab.no_overlap else 0)
             | (_pykernel.NO_CQ if ab.no_c_question else 0) | (_pykernel.NO_CA if ab.no_c_answer else 0))
    return SetProblem(
        candidates=cands, bm25=bm, pair=pair,
        qmask=_term_masks(q_terms, cands, m), amask=_term_masks(a_terms, cands, m),
        q_weights=_weights(q_terms, stats, ab.no_idf), a_weights=_weights(a_terms, stats, ab.no_idf),
        nq=len(q_terms), na=len(a_terms), flags=flags, epsilon=cfg.epsilon,
        q_terms=q_terms, a_terms=a_terms,
    )


def search_problem(problem: SetProblem, k_values, top_m: int = 1, backend: str | None = None):
    """Run a kernel; returns ``([(score, member idxs)], n_scored)``."""
    fn = _search_fn(backend)
    ranked, n_scored = fn(problem.bm25, problem.pair, problem.qmask, problem.amask,
                          problem.q_weights, problem.a_weights, problem.nq, problem.na,
                          list(k_values), problem.epsilon, problem.flags, top_m, TIE_RTOL)
    idxs = [s.idx for s in problem.candidates]
    return [(score, tuple(idxs[p] for p in pos)) for score, pos in ranked], n_scored


def _check_ks(n_cands: int, k_values, allow_singletons: bool):
    if not k_values:
        raise ValueError("k_values must be non-empty")
    lo = 1 if allow_singletons else 2
    for k in k_values:
        if k < lo:
            raise ValueError(f"k={k} below the minimum set size {lo}")
        if k > n_cands:
            raise InsufficientCandidates(f"k={k} exceeds the {n_cands} candidates")


def rank_sets(query: Query, candidates: Sequence[Sentence], stats: CorpusStats, k_values,
              params: Bm25Params = Bm25Params(), cfg: RoccConfig = RoccConfig(), top_m: int = 1,
              backend: str | None = None, allow_singletons: bool = False) -> list[JustificationSet]:
    """Best ``top_m`` sets over every size in ``k_values``.

    Order: descending score, then smaller k, then lexicographic member idxs.
    """
    k_values = sorted(set(k_values))
    _check_ks(len(candidates), k_values, allow_singletons)
    problem = prepare(query, candidates, stats, params, cfg)
    ranked, _ = search_problem(problem, k_values, top_m, backend)
    by_idx = {s.idx: s for s in problem.candidates}
    return [JustificationSet(members, rocc_score([by_idx[i] for i in members], query, stats, params, cfg))
            for _, members in ranked]


def select_parametric(query: Query, candidates: Sequence[Sentence], stats: CorpusStats, k: int,
                      params: Bm25Params = Bm25Params(), cfg: RoccConfig = RoccConfig(),
                      backend: str | None = None, allow_singletons: bool = False) -> JustificationSet:
    return rank_sets(query, candidates, stats, [k], params, cfg, 1, backend, allow_singletons)[0]


def select_auto(query: Query, candidates: Sequence[Sentence], stats: CorpusStats, k_values,
                params: Bm25Params = Bm25Params(), cfg: RoccConfig = RoccConfig(),
                backend: str | None = None, allow_singletons: bool = False) -> JustificationSet:
    return rank_sets(query, candidates, stats, k_values, params, cfg, 1, backend, allow_singletons)[0]


def select_beam(query: Query, candidates: Sequence[Sentence], stats: CorpusStats, k_values, width: int,
                params: Bm25Params = Bm25Params(), cfg: RoccConfig = RoccConfig(),
                allow_singletons: bool = False) -> JustificationSet:
    """Approximate search: grow sets one sentence at a time, keeping the ``width`` best per size."""
    k_values = sorted(set(k_values))
    _check_ks(len(candidates), k_values, allow_singletons)
    cands = sorted(candidates, key=lambda s: s.idx)
    want = set(k_values)

    def score(members):
        return rocc_score([cands[p] for p in members], query, stats, params, cfg).s

    # size-1 frontier is scored by R alone so that k=1 needs no special case
    frontier = sorted(((p,) for p in range(len(cands))),
                      key=lambda m: (-bm25_score(query, cands[m[0]], stats, params), m))[:width]
    best: tuple[float, int, tuple] | None = None
    for size in range(1, k_values[-1] + 1):
        if size > 1:
            grown = {tuple(sorted(m + (p,))) for m in frontier for p in range(len(cands)) if p not in m}
            scored = sorted(((score(m), m) for m in grown), key=lambda x: (-x[0], x[1]))
            frontier = [m for _, m in scored[:width]]
        if size in want:
            for m in frontier:
                s = score(m)
                if best is None or s > best[0] + TIE_RTOL * abs(best[0]):
                    best = (s, size, m)
    members = best[2]
    sents = [cands[p] for p in members]
    return JustificationSet(tuple(s.idx for s in sents), rocc_score(sents, query, stats, params, cfg))


def select_bm25_topk(query: Query, candidates: Sequence[Sentence], stats: CorpusStats, k: int,
                     params: Bm25Params = Bm25Params(), cfg: RoccConfig = RoccConfig()) -> JustificationSet:
    """IR baseline: the k individually best BM25 sentences (ties by idx)."""
    if k > len(candidates):
        raise InsufficientCandidates(f"k={k} exceeds the {len(candidates)} candidates")
    ranked = sorted(candidates, key=lambda s: (-bm25_score(query, s, stats, params), s.idx))[:k]
    ranked.sort(key=lambda s: s.idx)
    return JustificationSet(tuple(s.idx for s in ranked), rocc_score(ranked, query, stats, params, cfg))


def finalize(js: JustificationSet, candidates: Sequence[Sentence], passage_mode: bool = True,
             bm25: dict[int, float] | None = None) -> list[Sentence]:
    """Order the chosen sentences for output.

    Passage mode restores document order; KB mode puts the individually
    highest BM25 sentence first (ties by idx). ``bm25`` maps idx to score.
    """
    by_idx = {s.idx: s for s in candidates}
    chosen = [by_idx[i] for i in js.member_idxs]
    if passage_mode or bm25 is None:
        return sorted(chosen, key=lambda s: s.idx)
    return sorted(chosen, key=lambda s: (-bm25[s.idx], s.idx))


__all__ = [
    "JustificationSet", "SelectionConfig", "SetProblem", "InsufficientCandidates", "TIE_RTOL",
    "available_backends", "default_backend", "enumerate_sets", "count_sets", "prepare",
    "search_problem", "rank_sets", "select_parametric", "select_auto", "select_beam",
    "select_bm25_topk", "finalize",
]
