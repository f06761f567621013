import math
import re

import numpy as np
import pytest

from edukg.embedding import HashEmbedder, cosine, hash_embed
from edukg.keyphrase import (Keyphrase, extract_embedrank, extract_singlerank,
                             normalize_phrase, select_candidates)
from edukg.stopwords import STOPWORDS

SW = frozenset({"the", "a", "of", "is", "and", "in"})


def phrases(text, spans):
    return [normalize_phrase(text[s:e]) for s, e in spans]


class TestCandidates:
    def test_stopwords_break_runs(self):
        text = "the quick fox jumps over the lazy dog"
        got = phrases(text, select_candidates(text, SW))
        assert got == ["quick fox jumps over", "lazy dog"]

    def test_punctuation_breaks_runs(self):
        text = "graph theory, vertex cover"
        got = phrases(text, select_candidates(text, SW))
        assert got == ["graph theory", "vertex cover"]

    def test_digits_break_runs(self):
        text = "method 42 variants"
        got = phrases(text, select_candidates(text, SW))
        assert got == ["method", "variants"]

    def test_long_run_chunked_to_five(self):
        text = "one two three four five six seven"
        got = phrases(text, select_candidates(text, SW))
        assert got == ["one two three four five", "six seven"]

    def test_all_stopwords_empty(self):
        assert select_candidates("the of and is", SW) == []

    def test_spans_index_source_text(self):
        text = "Graph theory is fun"
        for s, e in select_candidates(text, SW):
            assert text[s:e].strip() == text[s:e]


def oracle_singlerank(text, n, stopwords, window=10):
    """Independent dense-matrix reimplementation used as an oracle."""
    word_re = re.compile(r"[^\W\d_]+", re.UNICODE)
    toks = [(m.group(0), m.start(), m.end()) for m in word_re.finditer(text)]
    spans = select_candidates(text, stopwords)
    positions = sorted({i for s, e in spans
                        for i, (_, ts, te) in enumerate(toks)
                        if ts >= s and te <= e})
    words = sorted({toks[i][0].lower() for i in positions})
    idx = {w: i for i, w in enumerate(words)}
    size = len(words)
    W = np.zeros((size, size))
    for ai, pa in enumerate(positions):
        for pb in positions[ai + 1:]:
            if pb - pa >= window:
                break
            a, b = idx[toks[pa][0].lower()], idx[toks[pb][0].lower()]
            if a != b:
                W[a, b] += 1
                W[b, a] += 1
    # power iteration on the full Google matrix
    d = 0.85
    out = W.sum(axis=1)
    M = np.zeros((size, size))
    for j in range(size):
        M[:, j] = W[j] / out[j] if out[j] else 1.0 / size
    G = (1 - d) / size * np.ones((size, size)) + d * M
    p = np.full(size, 1.0 / size)
    for _ in range(200):
        nxt = G @ p
        if np.abs(nxt - p).sum() < 1e-12:
            p = nxt
            break
        p = nxt
    scores = p * size
    best = {}
    for s, e in spans:
        ph = normalize_phrase(text[s:e])
        sc = sum(scores[idx[t.lower()]] for t, ts, te in toks
                 if ts >= s and te <= e and t.lower() in idx)
        if ph not in best or sc > best[ph][0]:
            span = best[ph][1] if ph in best else (s, e)
            best[ph] = (sc, span)
    ordered = sorted(best.items(), key=lambda kv: (-kv[1][0], kv[0]))
    return ordered[:n]


TEXT = ("Graph theory studies graphs. A graph contains vertices and edges. "
        "Vertices connect through edges; edge weights measure vertex similarity. "
        "Spectral graph methods analyze adjacency matrices of large graphs.")


class TestSingleRank:
    def test_matches_independent_oracle(self):
        got = extract_singlerank(TEXT, n=10, stopwords=STOPWORDS)
        want = oracle_singlerank(TEXT, 10, STOPWORDS)
        assert [k.text for k in got] == [t for t, _ in want]
        for k, (_, (score, _)) in zip(got, want):
            assert math.isclose(k.score, score, rel_tol=1e-4)

    def test_score_conservation(self):
        # PageRank probabilities sum to 1 before the xN scaling, so each word's
        # score is positive and the sum over distinct words equals the count
        got = extract_singlerank(TEXT, n=100, stopwords=STOPWORDS)
        assert all(k.score > 0 for k in got)

    def test_cap_respected(self):
        assert len(extract_singlerank(TEXT, n=3, stopwords=STOPWORDS)) == 3

    def test_deterministic(self):
        a = extract_singlerank(TEXT, n=15, stopwords=STOPWORDS)
        b = extract_singlerank(TEXT, n=15, stopwords=STOPWORDS)
        assert a == b

    def test_empty_text(self):
        assert extract_singlerank("", n=5) == []
        assert extract_singlerank("the of and", n=5, stopwords=SW) == []

    def test_n_validation(self):
        with pytest.raises(ValueError):
            extract_singlerank(TEXT, n=0)

    def test_repeated_word_ranks_high(self):
        text = ("networks networks appear everywhere; networks link routers, "
                "networks link switches, cables carry traffic")
        top = extract_singlerank(text, n=3, stopwords=SW)
        assert any("networks" in k.text for k in top[:2])

    def test_tie_break_lexicographic(self):
        # symmetric text: "alpha beta" and "beta alpha" give alpha/beta equal
        # scores; phrase order must fall back to lexicographic
        text = "alpha. beta. alpha. beta."
        got = extract_singlerank(text, n=5, stopwords=SW)
        assert [k.text for k in got] == ["alpha", "beta"]


class TestEmbedRank:
    def test_matches_exhaustive_oracle(self, embedder):
        got = extract_embedrank(TEXT, n=8, embedder=embedder, stopwords=STOPWORDS)
        doc = hash_embed(TEXT)
        best = {}
        for s, e in select_candidates(TEXT, STOPWORDS):
            ph = normalize_phrase(TEXT[s:e])
            sc = cosine(hash_embed(ph), doc)
            if ph not in best or sc > best[ph]:
                best[ph] = sc
        want = sorted(best.items(), key=lambda kv: (-kv[1], kv[0]))[:8]
        assert [k.text for k in got] == [t for t, _ in want]
        for k, (_, s) in zip(got, want):
            assert math.isclose(k.score, s, abs_tol=1e-9)

    def test_requires_embedder(self):
        with pytest.raises(ValueError):
            extract_embedrank(TEXT, n=5)

    def test_scores_in_range(self, embedder):
        for k in extract_embedrank(TEXT, n=50, embedder=embedder):
            assert -1.0 - 1e-9 <= k.score <= 1.0 + 1e-9

    def test_empty_text(self, embedder):
        assert extract_embedrank("", n=5, embedder=embedder) == []

    def test_spans_point_at_phrase(self, embedder):
        for k in extract_embedrank(TEXT, n=15, embedder=embedder):
            s, e = k.span
            assert normalize_phrase(TEXT[s:e]) == k.text
