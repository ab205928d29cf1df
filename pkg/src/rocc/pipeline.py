"""End-to-end selection for one QA instance."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator

from . import __version__
from .datasets import QAInstance
from .retrieval import Bm25Params, Index, bm25_score, form_query, retrieve_top_n
from .scoring import Ablation, RoccConfig
from .selector import (
    InsufficientCandidates, SelectionConfig, default_backend, finalize, rank_sets, select_auto,
    select_beam, select_bm25_topk,
)
from .text import DEFAULT_TOKENIZER, TokenizerConfig, build_stats

METHODS = ("rocc", "bm25", "bm25-matched")


@dataclass
class Pipeline:
    tokenizer: TokenizerConfig = DEFAULT_TOKENIZER
    bm25: Bm25Params = Bm25Params()
    rocc: RoccConfig = field(default_factory=RoccConfig)
    selection: SelectionConfig = SelectionConfig()
    mode: str = "passage"
    index: Index | None = None
    method: str = "rocc"
    backend: str | None = None

    def __post_init__(self):
        if self.mode not in ("passage", "kb"):
            raise ValueError("mode must be 'passage' or 'kb'")
        if self.mode == "kb" and self.index is None:
            raise ValueError("kb mode needs an index")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.method == "bm25" and self.selection.auto:
            raise ValueError("the bm25 baseline takes a fixed k; use bm25-matched with a k range")

    def with_ablation(self, ablation: Ablation) -> "Pipeline":
        return replace(self, rocc=replace(self.rocc, ablation=ablation))

    def config_dict(self) -> dict:
        return {
            "tool": "rocc", "version": __version__,
            "mode": self.mode, "method": self.method,
            "backend": self.backend or default_backend(),
            "tokenizer": self.tokenizer.to_dict(),
            "bm25": self.bm25.to_dict(),
            "rocc": self.rocc.to_dict(),
            "selection": self.selection.to_dict(),
        }

    def candidates(self, inst: QAInstance, query):
        """Candidate sentences, their collection statistics and BM25 scores by idx."""
        if self.mode == "passage":
            if inst.candidates is None:
                raise ValueError(f"instance {inst.id} has no passage candidates")
            cands = inst.sentences(self.tokenizer)
            stats = build_stats(cands)
            scores = {s.idx: bm25_score(query, s, stats, self.bm25) for s in cands}
            return cands, stats, scores
        hits = retrieve_top_n(query, self.index, self.selection.n, self.bm25)
        return [s for s, _ in hits], self.index.stats, {s.idx: sc for s, sc in hits}

    def _k_values(self, n_cands: int) -> list[int]:
        ks = list(self.selection.k_values)
        if self.selection.auto:
            feasible = [k for k in ks if k <= n_cands]
            if not feasible:
                raise InsufficientCandidates(f"only {n_cands} candidates for k in {ks}")
            return feasible
        if ks[0] > n_cands:
            raise InsufficientCandidates(f"k={ks[0]} exceeds the {n_cands} candidates")
        return ks

    def run(self, inst: QAInstance) -> dict:
        query = form_query(inst.question, inst.answer, self.tokenizer)
        cands, stats, scores = self.candidates(inst, query)
        ks = self._k_values(len(cands))
        sel = self.selection
        runners = []
        if self.method == "bm25":
            chosen = select_bm25_topk(query, cands, stats, ks[0], self.bm25, self.rocc)
        elif self.method == "bm25-matched":
            k = select_auto(query, cands, stats, ks, self.bm25, self.rocc, self.backend,
                            sel.allow_singletons).k
            chosen = select_bm25_topk(query, cands, stats, k, self.bm25, self.rocc)
        elif sel.beam_width is not None:
            chosen = select_beam(query, cands, stats, ks, sel.beam_width, self.bm25, self.rocc,
                                 sel.allow_singletons)
        else:
            ranked = rank_sets(query, cands, stats, ks, self.bm25, self.rocc, sel.top_m, self.backend,
                               sel.allow_singletons)
            chosen, runners = ranked[0], ranked[1:]
        passage = self.mode == "passage" and sel.reorder_by_index
        ordered = finalize(chosen, cands, passage_mode=passage, bm25=scores)
        rec = {
            "type": "selection",
            "id": inst.id,
            "k": chosen.k,
            "member_idxs": list(chosen.member_idxs),
            "ordered_idxs": [s.idx for s in ordered],
            "breakdown": chosen.breakdown.to_dict(),
            "n_candidates": len(cands),
        }
        if self.mode == "passage":
            rec["justification_text"] = " ".join(s.text for s in ordered)
        else:
            rec["justifications"] = [{"idx": s.idx, "text": s.text, "bm25": scores[s.idx]} for s in ordered]
        if runners:
            rec["runners_up"] = [r.to_dict() for r in runners]
        return rec

    def run_safe(self, inst: QAInstance) -> dict:
        """Like :meth:`run` but a failure becomes an error record."""
        try:
            return self.run(inst)
        except (ValueError, KeyError) as exc:
            return {"type": "error", "id": inst.id, "error": f"{type(exc).__name__}: {exc}"}


_WORKER: Pipeline | None = None


def _init_worker(pipeline: Pipeline):
    global _WORKER
    _WORKER = pipeline


def _run_in_worker(inst: QAInstance) -> dict:
    return _WORKER.run_safe(inst)


def run_many(pipeline: Pipeline, instances: Iterable[QAInstance], workers: int = 1) -> Iterator[dict]:
    """Selections in input order; ``workers > 1`` fans instances out to processes."""
    if workers <= 1:
        for inst in instances:
            yield pipeline.run_safe(inst)
        return
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(pipeline,)) as ex:
        yield from ex.map(_run_in_worker, instances, chunksize=8)
