"""Unsupervised selection of justification sentence sets (ROCC / AutoROCC).

Typical use::

    from rocc import form_query, make_sentences, build_stats, select_auto

    sents = make_sentences(passage_sentences)
    query = form_query(question, answer)
    best = select_auto(query, sents, build_stats(sents), k_values=range(2, 7))
"""

__version__ = "0.1.0"

from .datasets import DataError, QAInstance, adapt_arc, adapt_multirc, load_canonical, load_embeddings, write_canonical
from .evaluation import InstanceResult, JustificationMetrics, aggregate, prf_single
from .pipeline import Pipeline, run_many
from .retrieval import (
    Bm25Params, Index, Query, Sentence, bm25_score, build_index, form_query, make_sentences, retrieve_top_n,
)
from .scoring import (
    Ablation, AlignmentMatcher, EmbeddingTable, ExactMatcher, RoccConfig, ScoreBreakdown, coverage, overlap,
    relevance, rocc_score,
)
from .selector import (
    JustificationSet, SelectionConfig, available_backends, count_sets, default_backend, enumerate_sets,
    finalize, rank_sets, select_auto, select_beam, select_bm25_topk, select_parametric,
)
from .text import CorpusStats, TokenizerConfig, build_stats, idf, term_set, tokenize
