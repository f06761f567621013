"""Accuracy estimation by simple random sampling, text-diff metrics, and
keyphrase precision/recall scoring."""

from __future__ import annotations

import difflib
import json
import math
import random
import re
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ContractViolation, EmptyGraphError
from .graph import EduKG, Triple, triples as graph_triples

Z_SCORE = 1.96
MOE_THRESHOLD = 0.05
MIN_SAMPLES = 30
DEFAULT_BATCH = 30


@dataclass(frozen=True)
class Judgment:
    triple_key: str
    verdict: int  # 1 correct, 0 incorrect
    task: str  # entity | relation


@dataclass
class SessionStats:
    n: int = 0
    mu: float = 0.0
    sigma: float = 0.0
    moe: float = 0.0
    stopped: bool = False

    def to_dict(self) -> dict:
        return {"n": self.n, "mu": self.mu, "sigma": self.sigma,
                "moe": self.moe, "stopped": self.stopped}


def format_accuracy(mu: float, sigma: float) -> str:
    """Readout string, e.g. '0.47 ± 0.049'."""
    return f"{round(mu, 2):g} ± {round(sigma, 3):g}"


class SrsSession:
    """Iterative SRS annotation session over a graph's triples.

    Samples are drawn in batches without replacement; judging updates the
    running mean, standard deviation, and margin of error. The session stops
    once the minimum sample count is met and the margin of error falls under
    the threshold; until then exhausting the pool draws another batch.
    """

    def __init__(self, kg: EduKG, seed: int = 0, batch_size: int = DEFAULT_BATCH,
                 moe_threshold: float = MOE_THRESHOLD,
                 min_samples: int = MIN_SAMPLES, z: float = Z_SCORE,
                 session_id: str | None = None, annotator_id: str = "",
                 log_path: Path | None = None):
        self.session_id = session_id or uuid.uuid4().hex[:12]
        self.annotator_id = annotator_id
        self.batch_size = batch_size
        self.moe_threshold = moe_threshold
        self.min_samples = min_samples
        self.z = z
        self.log_path = Path(log_path) if log_path else None

        pool = graph_triples(kg)
        if not pool:
            raise EmptyGraphError("cannot evaluate an empty graph")
        rng = random.Random(seed)
        rng.shuffle(pool)
        self._pool = pool  # shuffled once; batches are consecutive slices
        self._sampled: dict[str, Triple] = {}
        self._drawn = 0
        self.judgments: list[Judgment] = []
        self._judged: set[str] = set()
        self.stats = SessionStats()
        self._draw_batch()

    # -- sampling ----------------------------------------------------------

    def _draw_batch(self) -> int:
        batch = self._pool[self._drawn:self._drawn + self.batch_size]
        self._drawn += len(batch)
        for t in batch:
            self._sampled[t.key] = t
        return len(batch)

    def next_triple(self) -> Triple | None:
        """Next sampled-but-unjudged triple, or None when the pool is spent."""
        if self.stats.stopped:
            raise ContractViolation("session already stopped")
        for t in self._sampled.values():
            if t.key not in self._judged:
                return t
        if self._draw_batch():
            return self.next_triple()
        return None

    @property
    def exhausted(self) -> bool:
        return self._drawn >= len(self._pool)

    # -- judging -----------------------------------------------------------

    def judge(self, triple_key: str, verdict: int, task: str = "entity") -> SessionStats:
        if self.stats.stopped:
            raise ContractViolation("session already stopped")
        if triple_key not in self._sampled:
            raise ContractViolation(f"triple was not sampled in this session: {triple_key}")
        if triple_key in self._judged:
            raise ContractViolation(f"triple already judged: {triple_key}")
        if verdict not in (0, 1):
            raise ContractViolation("verdict must be 0 or 1")
        if task not in ("entity", "relation"):
            raise ContractViolation("task must be 'entity' or 'relation'")
        judgment = Judgment(triple_key=triple_key, verdict=verdict, task=task)
        self.judgments.append(judgment)
        self._judged.add(triple_key)
        self._recompute()
        self._log(judgment)
        if not self.stats.stopped and not self._has_unjudged():
            self._draw_batch()
        return self.stats

    def _has_unjudged(self) -> bool:
        return any(k not in self._judged for k in self._sampled)

    def _recompute(self) -> None:
        n = len(self.judgments)
        mu = sum(j.verdict for j in self.judgments) / n
        sigma = math.sqrt(mu * (1 - mu) / n)
        moe = self.z * sigma
        stopped = n >= self.min_samples and moe <= self.moe_threshold
        self.stats = SessionStats(n=n, mu=mu, sigma=sigma, moe=moe, stopped=stopped)

    def _log(self, judgment: Judgment) -> None:
        if self.log_path is None:
            return
        with open(self.log_path, "a") as f:
            f.write(json.dumps({"session_id": self.session_id,
                                "triple": judgment.triple_key,
                                "verdict": judgment.verdict,
                                "task": judgment.task}) + "\n")


def srs_update(session: SrsSession, triple_key: str, verdict: int,
               task: str = "entity") -> SessionStats:
    return session.judge(triple_key, verdict, task)


# -- text extraction diff metrics ------------------------------------------

@dataclass
class DiffMetrics:
    nl_plus: int = 0
    nl_minus: int = 0
    p_plus: int = 0
    p_minus: int = 0
    p_rearranged: int = 0
    w_plus: int = 0
    w_minus: int = 0
    w_misspelled: int = 0

    def to_dict(self) -> dict:
        return {"nl_plus": self.nl_plus, "nl_minus": self.nl_minus,
                "p_plus": self.p_plus, "p_minus": self.p_minus,
                "p_rearranged": self.p_rearranged, "w_plus": self.w_plus,
                "w_minus": self.w_minus, "w_misspelled": self.w_misspelled}


def _paragraphs(text: str) -> list[str]:
    return [p.strip() for p in re.split(r"\n\s*\n", text) if p.strip()]


def _para_tokens(paragraph: str) -> list[str]:
    return paragraph.split()


def _fuzzy_match(a: str, b: str, threshold: float = 0.8) -> bool:
    ta, tb = _para_tokens(a), _para_tokens(b)
    if not ta or not tb:
        return a.strip() == b.strip()
    common = 0
    counts: dict[str, int] = {}
    for t in ta:
        counts[t] = counts.get(t, 0) + 1
    for t in tb:
        if counts.get(t, 0) > 0:
            counts[t] -= 1
            common += 1
    return common / max(len(ta), len(tb)) >= threshold


def _edit_distance(a: str, b: str, cap: int = 3) -> int:
    if abs(len(a) - len(b)) > cap:
        return cap + 1
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1,
                           prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def _lcs_pairs(out_paras: list[str], gold_paras: list[str]) -> list[tuple[int, int]]:
    """Longest common subsequence of paragraph indices under fuzzy equality."""
    n, m = len(out_paras), len(gold_paras)
    match = [[_fuzzy_match(out_paras[i], gold_paras[j]) for j in range(m)]
             for i in range(n)]
    lcs = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        for j in range(m - 1, -1, -1):
            if match[i][j]:
                lcs[i][j] = 1 + lcs[i + 1][j + 1]
            else:
                lcs[i][j] = max(lcs[i + 1][j], lcs[i][j + 1])
    pairs = []
    i = j = 0
    while i < n and j < m:
        if match[i][j] and lcs[i][j] == 1 + lcs[i + 1][j + 1]:
            pairs.append((i, j))
            i += 1
            j += 1
        elif lcs[i + 1][j] >= lcs[i][j + 1]:
            i += 1
        else:
            j += 1
    return pairs


def _sentence_boundary_diff(out_para: str, gold_para: str) -> tuple[int, int]:
    """Spurious/missing newline counts within a matched paragraph pair, with
    boundaries located by token offset through a token alignment."""
    out_tokens, gold_tokens = [], []
    out_bounds, gold_bounds = set(), set()
    for line in out_para.split("\n"):
        out_tokens.extend(line.split())
        out_bounds.add(len(out_tokens))
    out_bounds.discard(len(out_tokens))
    for line in gold_para.split("\n"):
        gold_tokens.extend(line.split())
        gold_bounds.add(len(gold_tokens))
    gold_bounds.discard(len(gold_tokens))

    matcher = difflib.SequenceMatcher(a=out_tokens, b=gold_tokens, autojunk=False)
    to_gold: dict[int, int] = {}
    for a, b, size in matcher.get_matching_blocks():
        for k in range(size + 1):
            to_gold[a + k] = b + k
    mapped = {to_gold[i] for i in out_bounds if i in to_gold}
    unmappable = sum(1 for i in out_bounds if i not in to_gold)
    nl_plus = len(mapped - gold_bounds) + unmappable
    nl_minus = len(gold_bounds - mapped)
    return nl_plus, nl_minus


def _word_diff(out_para: str, gold_para: str) -> tuple[int, int, int]:
    out_tokens = out_para.split()
    gold_tokens = gold_para.split()
    matcher = difflib.SequenceMatcher(a=out_tokens, b=gold_tokens, autojunk=False)
    w_plus = w_minus = w_mis = 0
    for op, a0, a1, b0, b1 in matcher.get_opcodes():
        if op == "insert":
            w_minus += b1 - b0
        elif op == "delete":
            w_plus += a1 - a0
        elif op == "replace":
            paired = min(a1 - a0, b1 - b0)
            for k in range(paired):
                if _edit_distance(out_tokens[a0 + k], gold_tokens[b0 + k]) <= 2:
                    w_mis += 1
                else:
                    w_plus += 1
                    w_minus += 1
            w_plus += (a1 - a0) - paired
            w_minus += (b1 - b0) - paired
    return w_plus, w_minus, w_mis


def eval_extraction_diff(output_text: str, gold_text: str) -> DiffMetrics:
    """Paragraph/newline/word differences between extracted and gold text.

    Texts use blank-line paragraph separators and newline sentence separators.
    """
    metrics = DiffMetrics()
    out_paras = _paragraphs(output_text)
    gold_paras = _paragraphs(gold_text)

    in_order = _lcs_pairs(out_paras, gold_paras)
    matched_out = {i for i, _ in in_order}
    matched_gold = {j for _, j in in_order}

    # Pair up leftover paragraphs that still fuzzy-match: rearranged.
    rearranged: list[tuple[int, int]] = []
    free_gold = [j for j in range(len(gold_paras)) if j not in matched_gold]
    for i in range(len(out_paras)):
        if i in matched_out:
            continue
        for j in list(free_gold):
            if _fuzzy_match(out_paras[i], gold_paras[j]):
                rearranged.append((i, j))
                free_gold.remove(j)
                matched_out.add(i)
                matched_gold.add(j)
                break

    metrics.p_rearranged = len(rearranged)
    metrics.p_plus = len(out_paras) - len(matched_out)
    metrics.p_minus = len(gold_paras) - len(matched_gold)

    for i, j in list(in_order) + rearranged:
        nl_p, nl_m = _sentence_boundary_diff(out_paras[i], gold_paras[j])
        metrics.nl_plus += nl_p
        metrics.nl_minus += nl_m
        w_p, w_m, w_mis = _word_diff(out_paras[i], gold_paras[j])
        metrics.w_plus += w_p
        metrics.w_minus += w_m
        metrics.w_misspelled += w_mis
    return metrics


# -- keyphrase scoring -----------------------------------------------------

def eval_keyphrases(predicted: list[str], gold: set[str], k: int) -> dict:
    """Precision/recall/F1 of the top-k predictions against a gold set.
    Phrases must be normalized (lowercase, single-spaced) by the caller."""
    if k < 1:
        raise ContractViolation("k must be >= 1")
    if not gold:
        raise ContractViolation("gold set must not be empty (recall undefined)")
    top = list(dict.fromkeys(predicted))[:k]  # dedupe, keep first occurrence
    k_eff = len(top)
    hits = sum(1 for p in top if p in gold)
    precision = hits / k_eff if k_eff else 0.0
    recall = hits / len(gold)
    f1 = (2 * precision * recall / (precision + recall)
          if precision + recall > 0 else 0.0)
    return {"precision": precision, "recall": recall, "f1": f1}
