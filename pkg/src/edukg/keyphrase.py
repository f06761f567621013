"""Top-n keyphrase extraction per slide.

Two rankers over the same candidate phrases: a co-occurrence-graph ranker
(SingleRank) and an embedding ranker that scores each phrase by cosine
similarity against the whole text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .embedding import EmbeddingProvider, cosine
from .stopwords import STOPWORDS

DEFAULT_N = 15  # more than 15 concepts per slide overwhelms learners
MAX_PHRASE_TOKENS = 5
COOCCURRENCE_WINDOW = 10
PAGERANK_DAMPING = 0.85
PAGERANK_TOL = 1e-6
PAGERANK_MAX_ITER = 100

_word_re = re.compile(r"[^\W\d_]+", re.UNICODE)


@dataclass(frozen=True)
class Keyphrase:
    text: str  # normalized: lowercased, single-spaced
    score: float
    span: tuple[int, int]  # character offsets into the source text


def normalize_phrase(text: str) -> str:
    return " ".join(text.lower().split())


def _tokens(text: str):
    """All alphabetic tokens with character spans."""
    return [(m.group(0), m.start(), m.end()) for m in _word_re.finditer(text)]


def select_candidates(text: str, stopwords: frozenset = STOPWORDS) -> list[tuple[int, int]]:
    """Maximal runs of adjacent non-stopword alphabetic tokens, broken at
    punctuation/sentence boundaries, chunked to at most five tokens."""
    runs: list[list[tuple[str, int, int]]] = []
    current: list[tuple[str, int, int]] = []
    for tok, start, end in _tokens(text):
        if tok.lower() in stopwords:
            if current:
                runs.append(current)
                current = []
            continue
        if current:
            between = text[current[-1][2]:start]
            if between.strip():  # punctuation or sentence boundary
                runs.append(current)
                current = []
        current.append((tok, start, end))
    if current:
        runs.append(current)

    spans = []
    for run in runs:
        for i in range(0, len(run), MAX_PHRASE_TOKENS):
            chunk = run[i:i + MAX_PHRASE_TOKENS]
            spans.append((chunk[0][1], chunk[-1][2]))
    return spans


def _top_n(scored: dict[str, tuple[float, tuple[int, int]]], n: int) -> list[Keyphrase]:
    ordered = sorted(scored.items(), key=lambda kv: (-kv[1][0], kv[0]))
    return [Keyphrase(text=t, score=s, span=span) for t, (s, span) in ordered[:n]]


def extract_singlerank(text: str, n: int = DEFAULT_N,
                       stopwords: frozenset = STOPWORDS,
                       window: int = COOCCURRENCE_WINDOW) -> list[Keyphrase]:
    """Rank candidate phrases by summed PageRank scores of their words over an
    undirected co-occurrence graph (window measured in token positions)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    spans = select_candidates(text, stopwords)
    if not spans:
        return []

    tokens = _tokens(text)
    candidate_positions = set()
    for start, end in spans:
        for idx, (_, s, e) in enumerate(tokens):
            if s >= start and e <= end:
                candidate_positions.add(idx)

    words = sorted({tokens[i][0].lower() for i in candidate_positions})
    index = {w: i for i, w in enumerate(words)}
    size = len(words)
    weights = np.zeros((size, size))
    positions = sorted(candidate_positions)
    for a_i, pos_a in enumerate(positions):
        wa = index[tokens[pos_a][0].lower()]
        for pos_b in positions[a_i + 1:]:
            if pos_b - pos_a >= window:
                break
            wb = index[tokens[pos_b][0].lower()]
            if wa != wb:
                weights[wa, wb] += 1.0
                weights[wb, wa] += 1.0

    scores = _pagerank(weights)

    scored: dict[str, tuple[float, tuple[int, int]]] = {}
    for start, end in spans:
        phrase = normalize_phrase(text[start:end])
        score = sum(scores[index[t.lower()]] for t, s, e in tokens
                    if s >= start and e <= end and t.lower() in index)
        _record(scored, phrase, score, (start, end))
    return _top_n(scored, n)


def _record(scored: dict, phrase: str, score: float, span: tuple[int, int]) -> None:
    """Collapse duplicate phrases keeping the best score and first span."""
    if phrase in scored:
        old_score, old_span = scored[phrase]
        if score > old_score:
            scored[phrase] = (score, old_span)
    else:
        scored[phrase] = (score, span)


def _pagerank(weights: np.ndarray, damping: float = PAGERANK_DAMPING,
              tol: float = PAGERANK_TOL, max_iter: int = PAGERANK_MAX_ITER) -> np.ndarray:
    """Damped PageRank on a weighted undirected graph, scaled so that the
    scores sum to the node count (uniform teleport)."""
    size = weights.shape[0]
    if size == 0:
        return np.zeros(0)
    out = weights.sum(axis=1)
    dangling = out == 0
    safe_out = np.where(dangling, 1.0, out)
    transition = weights / safe_out[:, None]  # row-stochastic for non-dangling
    p = np.full(size, 1.0 / size)
    for _ in range(max_iter):
        dangling_mass = p[dangling].sum()
        new = (1 - damping) / size + damping * (transition.T @ p + dangling_mass / size)
        if np.abs(new - p).sum() < tol:
            p = new
            break
        p = new
    return p * size


def extract_embedrank(text: str, n: int = DEFAULT_N,
                      embedder: EmbeddingProvider = None,
                      stopwords: frozenset = STOPWORDS) -> list[Keyphrase]:
    """Score each candidate phrase by cosine similarity of its embedding to
    the embedding of the whole text."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if embedder is None:
        raise ValueError("embedder is required")
    spans = select_candidates(text, stopwords)
    if not spans:
        return []
    doc_vec = embedder.embed(text)
    scored: dict[str, tuple[float, tuple[int, int]]] = {}
    for start, end in spans:
        phrase = normalize_phrase(text[start:end])
        score = cosine(embedder.embed(phrase), doc_vec)
        _record(scored, phrase, score, (start, end))
    return _top_n(scored, n)
