"""Turn keyphrases into weighted, disambiguated, pruned Main Concepts."""

from __future__ import annotations

import re
import time
import urllib.parse
from dataclasses import dataclass, replace

import httpx

from .embedding import EmbeddingProvider, cosine
from .errors import LinkerUnavailableError
from .kb import KBStore
from .keyphrase import Keyphrase

DEFAULT_PRUNE_THRESHOLD = 0.192
DEFAULT_SPOTLIGHT_CONFIDENCE = 0.35


@dataclass(frozen=True)
class ConceptCandidate:
    surface_form: str
    page_id: int
    title: str
    source: str  # remote-linker | local-linker | disambiguation


@dataclass(frozen=True)
class WeightedConcept:
    page_id: int
    title: str
    slide_no: int
    w_lm: float
    w_slide: float
    kind: str = "MC"
    low_confidence: bool = False

    @property
    def weight(self) -> float:
        return (self.w_lm + self.w_slide) / 2


class LocalLinker:
    """Match keyphrases against KB titles and redirects.

    Tries every contiguous token sub-span of a keyphrase, longest first, with
    a depluralized fallback on the last token, so chunked phrases such as
    "graph theory studies graphs" still surface "Graph theory" and "Graph".
    """

    def __init__(self, kb: KBStore):
        self.kb = kb

    def _lookup_span(self, phrase: str):
        rec = self.kb.try_lookup(phrase)
        if rec is None and phrase.endswith("s"):
            rec = self.kb.try_lookup(phrase[:-1])
            if rec is None and phrase.endswith("es"):
                rec = self.kb.try_lookup(phrase[:-2])
        return rec

    def link(self, keyphrases: list[Keyphrase], slide_text: str) -> list[ConceptCandidate]:
        candidates = []
        seen: set[int] = set()
        for kp in keyphrases:
            tokens = kp.text.split()
            for length in range(len(tokens), 0, -1):
                for start in range(0, len(tokens) - length + 1):
                    phrase = " ".join(tokens[start:start + length])
                    rec = self._lookup_span(phrase)
                    if rec is None or rec.is_disambiguation or rec.page_id in seen:
                        continue
                    seen.add(rec.page_id)
                    candidates.append(ConceptCandidate(
                        surface_form=phrase, page_id=rec.page_id,
                        title=rec.title, source="local-linker"))
        return candidates


class SpotlightLinker:
    """DBpedia-Spotlight-style remote linker.

    Posts the keyphrases joined with the slide context as form fields and maps
    each returned resource URI back to a KB title.
    """

    def __init__(self, kb: KBStore, endpoint: str,
                 confidence: float = DEFAULT_SPOTLIGHT_CONFIDENCE, *,
                 retries: int = 3, backoff: float = 0.2,
                 transport: httpx.BaseTransport | None = None):
        self.kb = kb
        self.endpoint = endpoint.rstrip("/")
        self.confidence = confidence
        self.retries = retries
        self.backoff = backoff
        self._client = httpx.Client(transport=transport, timeout=30.0)

    def link(self, keyphrases: list[Keyphrase], slide_text: str) -> list[ConceptCandidate]:
        text = "; ".join(kp.text for kp in keyphrases) + "\n" + slide_text
        payload = self._annotate(text)
        candidates = []
        seen: set[int] = set()
        for resource in payload.get("Resources", []):
            uri = resource.get("@URI", "")
            tail = urllib.parse.unquote(uri.rsplit("/", 1)[-1])
            rec = self.kb.try_lookup(tail.replace("_", " "))
            if rec is None or rec.is_disambiguation or rec.page_id in seen:
                continue
            seen.add(rec.page_id)
            candidates.append(ConceptCandidate(
                surface_form=resource.get("@surfaceForm", tail),
                page_id=rec.page_id, title=rec.title, source="remote-linker"))
        return candidates

    def _annotate(self, text: str) -> dict:
        last_exc = None
        for attempt in range(self.retries):
            if attempt:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                resp = self._client.post(
                    f"{self.endpoint}/rest/annotate",
                    data={"text": text, "confidence": str(self.confidence)},
                    headers={"Accept": "application/json"})
            except httpx.TransportError as exc:
                last_exc = exc
                continue
            if resp.status_code >= 500:
                last_exc = RuntimeError(f"status {resp.status_code}")
                continue
            resp.raise_for_status()
            return resp.json()
        raise LinkerUnavailableError(f"linker unreachable after {self.retries} attempts: {last_exc}")


def link_entities(keyphrases: list[Keyphrase], slide_text: str, linker) -> list[ConceptCandidate]:
    return linker.link(keyphrases, slide_text)


def weigh_concept(candidate: ConceptCandidate, slide_text: str, material_text: str,
                  kb: KBStore, embedder: EmbeddingProvider,
                  slide_no: int = 0) -> WeightedConcept:
    """Composite weight: mean of material-level and slide-level cosine
    similarities against the concept's abstract embedding."""
    rec = kb.lookup(candidate.page_id)
    low_confidence = not rec.abstract
    abstract_vec = rec.abstract_embedding
    if abstract_vec is None:
        abstract_vec = embedder.embed(rec.abstract)
    w_lm = cosine(embedder.embed(material_text), abstract_vec)
    w_slide = cosine(embedder.embed(slide_text), abstract_vec)
    return WeightedConcept(page_id=rec.page_id, title=rec.title, slide_no=slide_no,
                           w_lm=w_lm, w_slide=w_slide, low_confidence=low_confidence)


def disambiguate(concept: WeightedConcept, slide_text: str, material_text: str,
                 kb: KBStore, embedder: EmbeddingProvider) -> WeightedConcept:
    """Replace the concept with the highest-weighted alternative listed on its
    disambiguation page; the original competes too. Ties go to the
    lexicographically smallest title."""
    alternatives = kb.disambiguation_candidates(concept.title)
    if not alternatives:
        # a qualified title like "Foo (bar)" shares its disambiguation page
        # with the base title "Foo"
        base_title = re.sub(r"\s*\([^()]*\)$", "", concept.title)
        if base_title != concept.title:
            alternatives = kb.disambiguation_candidates(base_title)
    if not alternatives:
        return concept
    contenders = {concept.title: concept}
    for rec in alternatives:
        if rec.title in contenders:
            continue
        cand = ConceptCandidate(surface_form=concept.title, page_id=rec.page_id,
                                title=rec.title, source="disambiguation")
        contenders[rec.title] = weigh_concept(
            cand, slide_text, material_text, kb, embedder, slide_no=concept.slide_no)
    return min(contenders.values(), key=lambda c: (-c.weight, c.title))


def prune(concepts: list[WeightedConcept],
          threshold: float = DEFAULT_PRUNE_THRESHOLD) -> list[WeightedConcept]:
    """Keep concepts whose weight is at or above the threshold; strictly-below
    falls off. Order preserved."""
    return [c for c in concepts if c.weight >= threshold]


@dataclass
class AnnotationDeps:
    kb: KBStore
    embedder: EmbeddingProvider
    linker: object
    extract: callable  # (text) -> list[Keyphrase]
    threshold: float = DEFAULT_PRUNE_THRESHOLD
    disambiguation: bool = True


def annotate_slide(slide_no: int, slide_text: str, material_text: str,
                   deps: AnnotationDeps) -> list[WeightedConcept]:
    """Full per-slide composition: keyphrases -> link -> weigh ->
    disambiguate -> prune, with duplicates collapsed by page_id."""
    keyphrases = deps.extract(slide_text)
    candidates = link_entities(keyphrases, slide_text, deps.linker)
    concepts = [weigh_concept(c, slide_text, material_text, deps.kb,
                              deps.embedder, slide_no=slide_no)
                for c in candidates]
    if deps.disambiguation:
        concepts = [disambiguate(c, slide_text, material_text, deps.kb, deps.embedder)
                    for c in concepts]
    concepts = prune(concepts, deps.threshold)
    best: dict[int, WeightedConcept] = {}
    order: list[int] = []
    for c in concepts:
        if c.page_id not in best:
            best[c.page_id] = c
            order.append(c.page_id)
        elif c.weight > best[c.page_id].weight:
            best[c.page_id] = c
    return [best[pid] for pid in order]
