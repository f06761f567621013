import math

import numpy as np
import pytest

from edukg.annotation import WeightedConcept
from edukg.embedding import cosine, hash_embed
from edukg.expansion import (WeightedCategory, connected_concepts_weight,
                             expand_categories, expand_related)


def mc(page_id, title="T"):
    return WeightedConcept(page_id=page_id, title=title, slide_no=1,
                           w_lm=0.5, w_slide=0.5)


MATERIAL = "graph theory studies vertices and edges of graphs"


class TestConnectedConceptsWeight:
    def test_one_connected(self):
        assert math.isclose(connected_concepts_weight(1), 1.0 / math.log(2))
        assert math.isclose(connected_concepts_weight(1), 1.4426950408889634)

    def test_two_connected(self):
        assert math.isclose(connected_concepts_weight(2), 1.0 / math.log(3))
        assert math.isclose(connected_concepts_weight(2), 0.9102392266268373)

    def test_alternative_formula(self):
        assert math.isclose(connected_concepts_weight(1, "inv-log-plus-1"), 1.0)
        assert math.isclose(connected_concepts_weight(3, "inv-log-plus-1"),
                            1.0 / (math.log(3) + 1.0))

    def test_strictly_decreasing(self):
        vals = [connected_concepts_weight(n) for n in range(1, 20)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_validation(self):
        with pytest.raises(ValueError):
            connected_concepts_weight(0)
        with pytest.raises(ValueError):
            connected_concepts_weight(1, "bogus")


class TestExpandRelated:
    def test_weights_are_material_cosines(self, kb):
        vec = hash_embed(MATERIAL)
        got = expand_related(mc(1, "Graph"), vec, kb)
        # oracle: page 1 neighbors are out [3,4,2] and in [2,3,4]
        assert sorted(r.page_id for r in got) == [2, 3, 4]
        for r in got:
            want = cosine(kb.get(r.page_id).abstract_embedding, vec)
            assert math.isclose(r.weight, want, abs_tol=1e-12)
            assert r.parent_mc == 1

    def test_sorted_by_weight_desc(self, kb):
        got = expand_related(mc(1, "Graph"), hash_embed(MATERIAL), kb)
        weights = [r.weight for r in got]
        assert weights == sorted(weights, reverse=True)

    def test_cap(self, kb):
        got = expand_related(mc(1, "Graph"), hash_embed(MATERIAL), kb, k=2)
        assert len(got) == 2

    def test_excludes_self_and_material_mcs(self, kb):
        got = expand_related(mc(1, "Graph"), hash_embed(MATERIAL), kb,
                             material_mcs={1, 2, 3})
        assert sorted(r.page_id for r in got) == [4]

    def test_no_neighbors(self, kb):
        # Washington (8) has United States (7) as its only in-link
        got = expand_related(mc(8, "Washington"), hash_embed(MATERIAL), kb,
                             material_mcs={7, 8})
        assert got == []


class TestExpandCategories:
    def test_pooled_counts_and_weights(self, kb):
        vec = hash_embed(MATERIAL)
        mcs = [mc(1, "Graph"), mc(3, "Vertex (graph theory)"), mc(5, "Leonhard Euler")]
        got = expand_categories(mcs, vec, kb)
        # categories: Graph -> Mathematics, Graph theory; Vertex -> Graph theory;
        # Euler -> Mathematicians.  "Graph theory" is shared by two MCs.
        by_name = {c.name: c for cats in got.values() for c in cats}
        assert by_name["Graph theory"].n_connected == 2
        assert by_name["Mathematics"].n_connected == 1
        assert by_name["Mathematicians"].n_connected == 1
        for name, cat in by_name.items():
            w_nc = cosine(kb.category_embedding(name), vec)
            w_cc = 1.0 / math.log(cat.n_connected + 1)
            assert math.isclose(cat.w_nc, w_nc, abs_tol=1e-12)
            assert math.isclose(cat.w_cc, w_cc, abs_tol=1e-12)
            assert math.isclose(cat.weight, w_nc * w_cc, abs_tol=1e-12)

    def test_per_mc_assignment(self, kb):
        got = expand_categories([mc(1, "Graph"), mc(5, "Leonhard Euler")],
                                hash_embed(MATERIAL), kb)
        assert {c.name for c in got[1]} == {"Mathematics", "Graph theory"}
        assert {c.name for c in got[5]} == {"Mathematicians"}

    def test_cap(self, kb):
        got = expand_categories([mc(1, "Graph")], hash_embed(MATERIAL), kb, k=1)
        assert len(got[1]) == 1

    def test_parent_mcs_recorded(self, kb):
        got = expand_categories([mc(1, "Graph"), mc(3, "Vertex (graph theory)")],
                                hash_embed(MATERIAL), kb)
        shared = next(c for c in got[1] if c.name == "Graph theory")
        assert shared.parent_mcs == (1, 3)

    def test_sorted_by_weight(self, kb):
        got = expand_categories([mc(1, "Graph")], hash_embed(MATERIAL), kb)
        weights = [c.weight for c in got[1]]
        assert weights == sorted(weights, reverse=True)

    def test_no_categories(self, kb):
        # Mercury (disambiguation) carries no categories
        got = expand_categories([mc(9, "Mercury (disambiguation)")],
                                hash_embed(MATERIAL), kb)
        assert got[9] == []


class TestWeightedCategory:
    def test_weight_product(self):
        c = WeightedCategory(name="X", w_nc=0.5, n_connected=1,
                             w_cc=1.25, parent_mcs=(1,))
        assert math.isclose(c.weight, 0.625)
