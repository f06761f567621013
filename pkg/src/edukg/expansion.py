"""Expand Main Concepts with related concepts and categories from the KB."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .annotation import WeightedConcept
from .embedding import cosine
from .kb import KBStore

RELATED_CAP = 20
CATEGORY_CAP = 5


@dataclass(frozen=True)
class RelatedConcept:
    page_id: int
    title: str
    weight: float  # cosine(candidate abstract embedding, material embedding)
    parent_mc: int


@dataclass(frozen=True)
class WeightedCategory:
    name: str
    w_nc: float  # cosine(category name embedding, material embedding)
    n_connected: int  # distinct MCs carrying this category
    w_cc: float
    parent_mcs: tuple[int, ...]

    @property
    def weight(self) -> float:
        return self.w_nc * self.w_cc


def connected_concepts_weight(n_connected: int, formula: str = "inv-log-n-plus-1") -> float:
    """Penalty for overly generic categories: 1/ln(n+1) by default; the
    alternative +1 placement (1/(ln n + 1)) is available via `formula`."""
    if n_connected < 1:
        raise ValueError("n_connected must be >= 1")
    if formula == "inv-log-n-plus-1":
        return 1.0 / math.log(n_connected + 1)
    if formula == "inv-log-plus-1":
        return 1.0 / (math.log(n_connected) + 1.0)
    raise ValueError(f"unknown w_cc formula: {formula!r}")


def expand_related(mc: WeightedConcept, material_embedding: np.ndarray,
                   kb: KBStore, k: int = RELATED_CAP,
                   material_mcs: set[int] | None = None) -> list[RelatedConcept]:
    """Top-k pages linking to or from the MC's page, weighted by cosine of
    their abstract embedding against the material embedding."""
    exclude = set(material_mcs or ()) | {mc.page_id}
    nb = kb.neighbors(mc.page_id)
    pool = sorted(set(nb["out_links"]) | set(nb["in_links"]))
    related = []
    for pid in pool:
        if pid in exclude:
            continue
        rec = kb.get(pid)
        weight = cosine(rec.abstract_embedding, material_embedding) \
            if rec.abstract_embedding is not None else 0.0
        related.append(RelatedConcept(page_id=pid, title=rec.title,
                                      weight=weight, parent_mc=mc.page_id))
    related.sort(key=lambda r: (-r.weight, r.title))
    return related[:k]


def expand_categories(mcs: list[WeightedConcept], material_embedding: np.ndarray,
                      kb: KBStore, k: int = CATEGORY_CAP,
                      wcc_formula: str = "inv-log-n-plus-1"
                      ) -> dict[int, list[WeightedCategory]]:
    """Per MC, the top-k of its categories, weighted by w_nc * w_cc computed
    over the pooled categories of all MCs."""
    mc_categories: dict[int, list[str]] = {}
    category_mcs: dict[str, set[int]] = {}
    for mc in mcs:
        names = [name for name, _ in kb.categories_of(mc.page_id)]
        mc_categories[mc.page_id] = names
        for name in names:
            category_mcs.setdefault(name, set()).add(mc.page_id)

    weighted: dict[str, WeightedCategory] = {}
    for name, connected in category_mcs.items():
        emb = kb.category_embedding(name)
        w_nc = cosine(emb, material_embedding) if emb is not None else 0.0
        weighted[name] = WeightedCategory(
            name=name, w_nc=w_nc, n_connected=len(connected),
            w_cc=connected_concepts_weight(len(connected), wcc_formula),
            parent_mcs=tuple(sorted(connected)))

    result: dict[int, list[WeightedCategory]] = {}
    for mc in mcs:
        own = [weighted[name] for name in mc_categories[mc.page_id]]
        own.sort(key=lambda c: (-c.weight, c.name))
        result[mc.page_id] = own[:k]
    return result
