"""Typed property graph: slide fragments, material-level merge, export, sampling."""

from __future__ import annotations

import hashlib
import json
import random
import xml.sax.saxutils as saxutils
from dataclasses import dataclass, field

from .annotation import WeightedConcept
from .errors import ConfigurationError, ConflictError, ContractViolation, EmptyGraphError
from .expansion import RelatedConcept, WeightedCategory

NODE_TYPES = ("LearningMaterial", "Slide", "Concept", "Category")
EDGE_TYPES = ("CONTAINS", "HAS_CONCEPT", "RELATED_TO", "BELONGS_TO")


@dataclass(frozen=True)
class Node:
    id: str
    type: str
    props: tuple = ()  # sorted (key, value) pairs

    def prop(self, key, default=None):
        return dict(self.props).get(key, default)


@dataclass(frozen=True)
class Edge:
    type: str
    src: str
    dst: str
    weight: float | None = None
    provenance: str = "material"  # "slide:<n>" or "material"


@dataclass(frozen=True)
class Triple:
    subject: str
    predicate: str
    object: str
    provenance: str

    @property
    def key(self) -> str:
        return f"{self.predicate}|{self.subject}|{self.object}"


def material_node_id(material_id: str) -> str:
    return f"material:{material_id}"


def slide_node_id(material_id: str, slide_no: int) -> str:
    return f"slide:{material_id}:{slide_no}"


def concept_node_id(page_id: int) -> str:
    return f"page:{page_id}"


def category_node_id(name: str) -> str:
    return f"category:{name}"


class EduKG:
    """Material- or slide-level graph. Node identity is the node id; at most
    one edge of a given type between the same pair."""

    def __init__(self, material_id: str):
        self.material_id = material_id
        self._nodes: dict[str, Node] = {}
        self._edges: dict[tuple[str, str, str], Edge] = {}

    # -- construction ------------------------------------------------------

    def add_node(self, node: Node) -> None:
        existing = self._nodes.get(node.id)
        if existing is None or (not existing.props and node.props):
            self._nodes[node.id] = node

    def add_edge(self, edge: Edge) -> None:
        if edge.src not in self._nodes or edge.dst not in self._nodes:
            raise ContractViolation(f"edge endpoints must exist: {edge}")
        self._edges[(edge.type, edge.src, edge.dst)] = edge

    @property
    def nodes(self) -> list[Node]:
        return sorted(self._nodes.values(), key=lambda n: (n.type, n.id))

    @property
    def edges(self) -> list[Edge]:
        return sorted(self._edges.values(), key=lambda e: (e.type, e.src, e.dst))

    def node(self, node_id: str) -> Node | None:
        return self._nodes.get(node_id)

    def edge(self, type: str, src: str, dst: str) -> Edge | None:
        return self._edges.get((type, src, dst))

    def concept_ids(self, kind: str | None = None) -> set[str]:
        return {n.id for n in self._nodes.values()
                if n.type == "Concept" and (kind is None or n.prop("kind") == kind)}


def build_slide_kg(material_id: str, material_name: str, slide_no: int,
                   slide_text: str, mcs: list[WeightedConcept],
                   existing_slides: set[int] | None = None) -> EduKG:
    """One slide's fragment: LM and Slide nodes, MC nodes, CONTAINS and
    HAS_CONCEPT edges. Persistable before the full material finishes."""
    if existing_slides and slide_no in existing_slides:
        raise ConflictError(f"slide {slide_no} already built for {material_id}")
    kg = EduKG(material_id)
    lm = material_node_id(material_id)
    sl = slide_node_id(material_id, slide_no)
    text_hash = hashlib.sha256(slide_text.encode("utf-8")).hexdigest()[:16]
    kg.add_node(Node(id=lm, type="LearningMaterial", props=(("name", material_name),)))
    kg.add_node(Node(id=sl, type="Slide",
                     props=(("slide_no", slide_no), ("text_hash", text_hash))))
    kg.add_edge(Edge(type="CONTAINS", src=lm, dst=sl, provenance=f"slide:{slide_no}"))
    for mc in mcs:
        cid = concept_node_id(mc.page_id)
        kg.add_node(Node(id=cid, type="Concept",
                         props=(("kind", "MC"), ("title", mc.title))))
        kg.add_edge(Edge(type="CONTAINS", src=sl, dst=cid, weight=mc.weight,
                         provenance=f"slide:{slide_no}"))
        kg.add_edge(Edge(type="HAS_CONCEPT", src=lm, dst=cid, weight=mc.weight,
                         provenance=f"slide:{slide_no}"))
    return kg


def merge(fragments: list[EduKG],
          expansions: dict[int, dict] | None = None,
          lm_weight_rule: str = "max") -> EduKG:
    """Merge slide fragments into the material-level graph. Concept nodes are
    unified by page id; the LM-level concept weight combines the contributing
    slide weights (max by default, mean via config)."""
    if not fragments:
        raise ContractViolation("nothing to merge")
    material_ids = {f.material_id for f in fragments}
    if len(material_ids) != 1:
        raise ContractViolation(f"mixed material ids: {sorted(material_ids)}")
    if lm_weight_rule not in ("max", "mean"):
        raise ConfigurationError(f"unknown merge rule: {lm_weight_rule!r}")

    kg = EduKG(fragments[0].material_id)
    lm_weights: dict[str, list[float]] = {}
    for frag in fragments:
        for node in frag.nodes:
            kg.add_node(node)
        for edge in frag.edges:
            if edge.type == "HAS_CONCEPT":
                lm_weights.setdefault(edge.dst, []).append(edge.weight)
            else:
                kg.add_edge(edge)
    lm = material_node_id(kg.material_id)
    for dst, weights in lm_weights.items():
        combined = max(weights) if lm_weight_rule == "max" else sum(weights) / len(weights)
        kg.add_edge(Edge(type="HAS_CONCEPT", src=lm, dst=dst, weight=combined))

    for mc_page_id, exp in (expansions or {}).items():
        mc_id = concept_node_id(mc_page_id)
        if kg.node(mc_id) is None:
            raise ContractViolation(f"expansion for unknown MC page {mc_page_id}")
        for rc in exp.get("related", []):
            rc_id = concept_node_id(rc.page_id)
            if kg.node(rc_id) is None:
                kg.add_node(Node(id=rc_id, type="Concept",
                                 props=(("kind", "RC"), ("title", rc.title))))
            kg.add_edge(Edge(type="RELATED_TO", src=mc_id, dst=rc_id,
                             weight=rc.weight))
        for cat in exp.get("categories", []):
            cat_id = category_node_id(cat.name)
            kg.add_node(Node(id=cat_id, type="Category", props=(("name", cat.name),)))
            kg.add_edge(Edge(type="BELONGS_TO", src=mc_id, dst=cat_id,
                             weight=cat.weight))
    return kg


# -- export / import -------------------------------------------------------

def export(kg: EduKG, format: str = "jsonl") -> bytes:
    if format == "jsonl":
        return export_jsonl(kg)
    if format == "graphml":
        return export_graphml(kg)
    raise ConfigurationError(f"unknown export format: {format!r}")


def _node_record(node: Node) -> dict:
    rec = {"t": "node", "type": node.type, "id": node.id}
    rec.update(dict(node.props))
    return rec


def _edge_record(edge: Edge) -> dict:
    rec = {"t": "edge", "type": edge.type, "from": edge.src, "to": edge.dst}
    if edge.weight is not None:
        rec["w"] = edge.weight
    if edge.provenance != "material":
        rec["prov"] = edge.provenance
    return rec


def export_jsonl(kg: EduKG) -> bytes:
    lines = [json.dumps({"t": "header", "format": "edukg-jsonl", "version": 1,
                         "material_id": kg.material_id}, sort_keys=True)]
    lines += [json.dumps(_node_record(n), sort_keys=True) for n in kg.nodes]
    lines += [json.dumps(_edge_record(e), sort_keys=True) for e in kg.edges]
    return ("\n".join(lines) + "\n").encode("utf-8")


def parse_jsonl(data: bytes) -> EduKG:
    lines = [ln for ln in data.decode("utf-8").splitlines() if ln.strip()]
    header = json.loads(lines[0])
    if header.get("format") != "edukg-jsonl":
        raise ConfigurationError("not an edukg JSONL export")
    kg = EduKG(header["material_id"])
    for line in lines[1:]:
        rec = json.loads(line)
        if rec["t"] == "node":
            props = tuple(sorted((k, v) for k, v in rec.items()
                                 if k not in ("t", "type", "id")))
            kg.add_node(Node(id=rec["id"], type=rec["type"], props=props))
        elif rec["t"] == "edge":
            kg.add_edge(Edge(type=rec["type"], src=rec["from"], dst=rec["to"],
                             weight=rec.get("w"),
                             provenance=rec.get("prov", "material")))
    return kg


def export_graphml(kg: EduKG) -> bytes:
    esc = saxutils.escape

    def attr(v):
        return saxutils.quoteattr(str(v))

    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">',
           '  <key id="type" for="node" attr.name="type" attr.type="string"/>',
           '  <key id="label" for="node" attr.name="label" attr.type="string"/>',
           '  <key id="etype" for="edge" attr.name="type" attr.type="string"/>',
           '  <key id="w" for="edge" attr.name="w" attr.type="double"/>',
           f'  <graph id={attr(kg.material_id)} edgedefault="directed">']
    for n in kg.nodes:
        label = n.prop("title") or n.prop("name") or n.id
        out.append(f'    <node id={attr(n.id)}>')
        out.append(f'      <data key="type">{esc(n.type)}</data>')
        out.append(f'      <data key="label">{esc(str(label))}</data>')
        out.append('    </node>')
    for i, e in enumerate(kg.edges):
        out.append(f'    <edge id="e{i}" source={attr(e.src)} target={attr(e.dst)}>')
        out.append(f'      <data key="etype">{esc(e.type)}</data>')
        if e.weight is not None:
            out.append(f'      <data key="w">{e.weight!r}</data>')
        out.append('    </edge>')
    out += ['  </graph>', '</graphml>', '']
    return "\n".join(out).encode("utf-8")


# -- sampling --------------------------------------------------------------

def triples(kg: EduKG) -> list[Triple]:
    return [Triple(subject=e.src, predicate=e.type, object=e.dst,
                   provenance=e.provenance) for e in kg.edges]


def sample_triples(kg: EduKG, n: int, seed: int,
                   with_replacement: bool = False) -> list[Triple]:
    """Uniform random sample over all edges; deterministic under a fixed seed.
    Without replacement, n larger than the edge count returns every edge."""
    pool = triples(kg)
    if not pool:
        raise EmptyGraphError("graph has no edges to sample")
    rng = random.Random(seed)
    if with_replacement:
        return rng.choices(pool, k=n)
    if n >= len(pool):
        return list(pool)
    return rng.sample(pool, n)
