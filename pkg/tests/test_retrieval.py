import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from rocc.retrieval import (
    Bm25Params, Index, Sentence, bm25_score, build_index, form_query, linear_scan_top_n, make_sentences,
    retrieve_top_n,
)
from rocc.text import build_stats, idf

from oracle import bm25 as oracle_bm25


def random_corpus(rng, n, vocab=30):
    words = [f"w{i}" for i in range(vocab)]
    return make_sentences(" ".join(rng.choice(words) for _ in range(rng.randint(1, 10))) for _ in range(n))


class TestFormQuery:
    def test_terms(self):
        q = form_query("Which organ?", "liver")
        assert q.q_terms == {"which", "organ"} and q.a_terms == {"liver"}
        assert q.all_tokens == ("which", "organ", "liver")

    def test_empty_answer(self):
        assert form_query("Which organ?", "").a_terms == frozenset()

    def test_shared_term(self):
        q = form_query("digestive system", "the digestive system")
        assert "digestive" in q.q_terms and "digestive" in q.a_terms

    def test_empty_question(self):
        with pytest.raises(ValueError):
            form_query("  ", "liver")


class TestBm25:
    def test_no_shared_terms(self):
        sents = make_sentences(["a b", "c d"])
        assert bm25_score(form_query("x y", ""), sents[0], build_stats(sents)) == 0.0

    def test_unit_tf_factor_at_average_length(self):
        sents = make_sentences(["a b", "c d", "a e"])
        stats = build_stats(sents)
        assert stats.avg_len == 2
        score = bm25_score(form_query("a", ""), sents[0], stats)
        assert math.isclose(score, idf("a", stats), rel_tol=1e-9)

    def test_hand_computed_sum(self):
        docs = [["the", "liver", "is", "an", "organ"], ["colon", "and", "liver"], ["small", "intestine"],
                ["the", "colon", "absorbs", "water", "the", "end"], ["pancreas"]]
        sents = [Sentence(i, " ".join(d), tuple(d), frozenset(d)) for i, d in enumerate(docs)]
        stats = build_stats(sents)
        q = form_query("the liver colon", "water")
        for s, d in zip(sents, docs):
            assert math.isclose(bm25_score(q, s, stats), oracle_bm25(list(q.all_tokens), d, docs), rel_tol=1e-12)

    def test_frozen_values(self):
        # hand evaluation: N=5, avg_len=17/5, "the" df=2 in a 5-token doc with tf=1
        docs = [["the", "liver", "is", "an", "organ"], ["colon", "and", "liver"], ["small", "intestine"],
                ["the", "colon", "absorbs", "water", "the", "end"], ["pancreas"]]
        sents = [Sentence(i, " ".join(d), tuple(d), frozenset(d)) for i, d in enumerate(docs)]
        stats = build_stats(sents)
        idf_the = math.log(1 + (5 - 2 + 0.5) / (2 + 0.5))
        idf_liver = idf_the
        norm = 1.2 * (1 - 0.75 + 0.75 * 5 / 3.4)
        expected = (idf_the + idf_liver) * 2.2 / (1 + norm)
        assert math.isclose(bm25_score(form_query("the liver", ""), sents[0], stats), expected, rel_tol=1e-12)

    def test_repeated_query_terms(self):
        sents = make_sentences(["a b", "c d"])
        stats = build_stats(sents)
        q = form_query("a a", "a")
        once = bm25_score(q, sents[0], stats)
        thrice = bm25_score(q, sents[0], stats, Bm25Params(unique_query_terms=False))
        assert math.isclose(thrice, 3 * once, rel_tol=1e-12)

    def test_params_validated(self):
        with pytest.raises(ValueError):
            Bm25Params(k1=-1)
        with pytest.raises(ValueError):
            Bm25Params(b=1.5)

    @given(st.integers(0, 10_000))
    @settings(max_examples=100)
    def test_removing_query_term_never_increases(self, seed):
        rng = random.Random(seed)
        sents = random_corpus(rng, 8, vocab=12)
        stats = build_stats(sents)
        q_tokens = [f"w{rng.randrange(12)}" for _ in range(5)]
        full = form_query(" ".join(q_tokens), "")
        drop = form_query(" ".join(q_tokens[1:]) or "zzz", "")
        for s in sents:
            a, b = bm25_score(full, s, stats), bm25_score(drop, s, stats)
            assert a >= 0 and b <= a + 1e-12


class TestIndex:
    def test_postings_match_direct_count(self):
        sents = make_sentences(["a b a", "b c", "c c d"])
        index = build_index(sents)
        assert index.postings["a"] == [(0, 2)]
        assert index.postings["b"] == [(0, 1), (1, 1)]
        assert index.postings["c"] == [(1, 1), (2, 2)]
        for term, plist in index.postings.items():
            assert index.stats.df(term) == len(plist)

    def test_duplicates_keep_idx(self):
        index = build_index(make_sentences(["same text", "same text"]))
        assert [s.idx for s in index.sentences] == [0, 1]
        assert index.postings["same"] == [(0, 1), (1, 1)]

    def test_empty(self):
        with pytest.raises(ValueError):
            build_index([])

    def test_large_corpus_top_n_matches_linear_scan(self):
        rng = random.Random(3)
        sents = random_corpus(rng, 10_000, vocab=400)
        index = build_index(sents)
        for _ in range(5):
            q = form_query(" ".join(f"w{rng.randrange(400)}" for _ in range(6)), f"w{rng.randrange(400)}")
            got = [(s.idx, sc) for s, sc in retrieve_top_n(q, index, 20)]
            want = [(s.idx, sc) for s, sc in linear_scan_top_n(q, sents, index.stats, 20)]
            assert got == want

    def test_round_trip_bytes(self):
        index = build_index(make_sentences(["alpha beta", "gamma, delta!", "beta"]))
        again = Index.from_bytes(index.to_bytes())
        assert again.postings == index.postings
        assert again.to_bytes() == index.to_bytes()

    def test_rejects_foreign_bytes(self):
        with pytest.raises(ValueError):
            Index.from_bytes(b"garbage")


class TestRetrieveTopN:
    def test_n_one(self):
        sents = make_sentences(["liver", "liver liver colon", "stomach"])
        index = build_index(sents)
        hits = retrieve_top_n(form_query("liver colon", ""), index, 1)
        assert [s.idx for s, _ in hits] == [1]

    def test_tie_lower_idx_first(self):
        sents = make_sentences(["x liver", "y stomach", "z liver"])
        hits = retrieve_top_n(form_query("liver", ""), build_index(sents), 5)
        assert [s.idx for s, _ in hits] == [0, 2]
        assert hits[0][1] == hits[1][1]

    def test_only_positive_scores(self):
        sents = make_sentences(["a", "b", "c"])
        assert retrieve_top_n(form_query("a", ""), build_index(sents), 20) == [(sents[0], pytest.approx(
            bm25_score(form_query("a", ""), sents[0], build_stats(sents))))]

    def test_full_sort_oracle(self):
        rng = random.Random(11)
        sents = random_corpus(rng, 100, vocab=50)
        index = build_index(sents)
        q = form_query("w1 w2 w3 w4 w5", "w6 w7")
        everything = sorted(((bm25_score(q, s, index.stats), s.idx) for s in sents), key=lambda p: (-p[0], p[1]))
        want = [i for sc, i in everything if sc > 0][:20]
        assert [s.idx for s, _ in retrieve_top_n(q, index, 20)] == want

    def test_bad_n(self):
        with pytest.raises(ValueError):
            retrieve_top_n(form_query("a", ""), build_index(make_sentences(["a"])), 0)

    def test_zero_overlap_sentence_does_not_change_ranking(self):
        rng = random.Random(5)
        sents = random_corpus(rng, 50, vocab=20)
        q = form_query("w1 w2 w3", "w4")
        stats = build_stats(sents)
        before = [s.idx for s, _ in linear_scan_top_n(q, sents, stats, 10)]
        # statistics held fixed: the new sentence only joins the candidate pool
        extra = sents + [Sentence.from_text(50, "w15 w16 w17")]
        after = [s.idx for s, _ in linear_scan_top_n(q, extra, stats, 10)]
        assert before == after
