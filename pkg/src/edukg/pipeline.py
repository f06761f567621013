"""End-to-end material build: extraction -> keyphrases -> annotation ->
expansion -> merged material graph."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import partial

from . import extraction, keyphrase
from .annotation import (AnnotationDeps, DEFAULT_PRUNE_THRESHOLD, LocalLinker,
                         WeightedConcept, annotate_slide)
from .embedding import EmbeddingProvider
from .expansion import (CATEGORY_CAP, RELATED_CAP, expand_categories,
                        expand_related)
from .graph import EduKG, build_slide_kg, merge
from .kb import KBStore
from .materials import MaterialStore


@dataclass(frozen=True)
class PipelineConfig:
    keyphrase_n: int = keyphrase.DEFAULT_N
    extractor: str = "embedrank"  # embedrank | singlerank
    threshold: float = DEFAULT_PRUNE_THRESHOLD
    disambiguation: bool = True
    related_cap: int = RELATED_CAP
    category_cap: int = CATEGORY_CAP
    lm_weight_rule: str = "max"
    prune_expansion: bool = False  # expansion is not pruned by default
    wcc_formula: str = "inv-log-n-plus-1"
    segmentation: extraction.SegmentationConfig = field(
        default_factory=extraction.SegmentationConfig)


class LocalExpander:
    """Related-concept and category expansion straight from the KB store."""

    def __init__(self, kb: KBStore, config: PipelineConfig):
        self.kb = kb
        self.config = config

    def expand(self, mcs: list[WeightedConcept], material_embedding) -> dict[int, dict]:
        mc_ids = {mc.page_id for mc in mcs}
        categories = expand_categories(mcs, material_embedding, self.kb,
                                       k=self.config.category_cap,
                                       wcc_formula=self.config.wcc_formula)
        result = {}
        for mc in mcs:
            related = expand_related(mc, material_embedding, self.kb,
                                     k=self.config.related_cap,
                                     material_mcs=mc_ids)
            cats = categories[mc.page_id]
            if self.config.prune_expansion:
                related = [r for r in related if r.weight >= self.config.threshold]
                cats = [c for c in cats if c.weight >= self.config.threshold]
            result[mc.page_id] = {"related": related, "categories": cats}
        return result


@dataclass
class PipelineDeps:
    kb: KBStore
    embedder: EmbeddingProvider
    linker: object
    expander: object

    @classmethod
    def local(cls, kb: KBStore, embedder: EmbeddingProvider,
              config: PipelineConfig | None = None) -> "PipelineDeps":
        config = config or PipelineConfig()
        return cls(kb=kb, embedder=embedder, linker=LocalLinker(kb),
                   expander=LocalExpander(kb, config))


@dataclass
class BuildResult:
    material_id: str
    slide_count: int
    mcs_per_slide: list[list[WeightedConcept]]
    kg: EduKG


def _make_extractor(config: PipelineConfig, embedder: EmbeddingProvider):
    if config.extractor == "embedrank":
        return partial(keyphrase.extract_embedrank, n=config.keyphrase_n,
                       embedder=embedder)
    if config.extractor == "singlerank":
        return partial(keyphrase.extract_singlerank, n=config.keyphrase_n)
    raise ValueError(f"unknown extractor: {config.extractor!r}")


def build_material(material_id: str, name: str, elements: dict,
                   deps: PipelineDeps, config: PipelineConfig | None = None,
                   store: MaterialStore | None = None) -> BuildResult:
    """Build the full material graph; slide fragments are flushed to the
    store as soon as each slide is annotated."""
    config = config or PipelineConfig()
    pages = extraction.ingest(elements, format="elements-json")
    noise = extraction.detect_recurring_noise(pages)
    texts = extraction.extract_material_text(pages, noise, config.segmentation)

    if store is not None:
        store.start_material(material_id, name)

    ann = AnnotationDeps(kb=deps.kb, embedder=deps.embedder, linker=deps.linker,
                         extract=_make_extractor(config, deps.embedder),
                         threshold=config.threshold,
                         disambiguation=config.disambiguation)

    fragments = []
    mcs_per_slide = []
    for idx, slide_text in enumerate(texts.slide_texts):
        slide_no = pages.pages[idx].page_no
        mcs = annotate_slide(slide_no, slide_text, texts.material_text, ann)
        mcs_per_slide.append(mcs)
        fragment = build_slide_kg(material_id, name, slide_no, slide_text, mcs)
        fragments.append(fragment)
        if store is not None:
            store.write_fragment(material_id, slide_no, fragment)
    if store is not None:
        store.write_meta(material_id, name, texts.slide_texts)

    # Material-level MC set: best-weighted instance per page id.
    best: dict[int, WeightedConcept] = {}
    for mcs in mcs_per_slide:
        for mc in mcs:
            if mc.page_id not in best or mc.weight > best[mc.page_id].weight:
                best[mc.page_id] = mc
    material_mcs = [best[pid] for pid in sorted(best)]

    expansions = {}
    if material_mcs:
        material_embedding = deps.embedder.embed(texts.material_text)
        expansions = deps.expander.expand(material_mcs, material_embedding)

    kg = merge(fragments, expansions, lm_weight_rule=config.lm_weight_rule) \
        if fragments else EduKG(material_id)
    if store is not None:
        store.write_material(material_id, kg)
    return BuildResult(material_id=material_id, slide_count=pages.page_count,
                       mcs_per_slide=mcs_per_slide, kg=kg)
