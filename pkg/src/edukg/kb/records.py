"""Knowledge-base record types."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class KBRecord:
    page_id: int
    title: str
    abstract: str = ""
    out_links: list[int] = field(default_factory=list)
    categories: list[str] = field(default_factory=list)
    redirect_to: int | None = None
    is_disambiguation: bool = False
    abstract_embedding: np.ndarray | None = None

    @property
    def is_redirect(self) -> bool:
        return self.redirect_to is not None

    def to_json_dict(self) -> dict:
        return {
            "page_id": self.page_id,
            "title": self.title,
            "abstract": self.abstract,
            "out_links": self.out_links,
            "categories": self.categories,
            "redirect_to": self.redirect_to,
            "is_disambiguation": self.is_disambiguation,
            "embedding": [float(x) for x in self.abstract_embedding]
            if self.abstract_embedding is not None else None,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "KBRecord":
        emb = d.get("embedding")
        return cls(
            page_id=d["page_id"],
            title=d["title"],
            abstract=d.get("abstract", ""),
            out_links=list(d.get("out_links", [])),
            categories=list(d.get("categories", [])),
            redirect_to=d.get("redirect_to"),
            is_disambiguation=d.get("is_disambiguation", False),
            abstract_embedding=np.asarray(emb, dtype=float) if emb is not None else None,
        )


@dataclass
class KBStats:
    pages: int = 0
    redirects: int = 0
    disambiguations: int = 0
    links: int = 0
    categories: int = 0
    dropped_links: int = 0
    build_timestamp: str = ""

    def to_json_dict(self) -> dict:
        return {
            "pages": self.pages,
            "redirects": self.redirects,
            "disambiguations": self.disambiguations,
            "links": self.links,
            "categories": self.categories,
            "dropped_links": self.dropped_links,
            "build_timestamp": self.build_timestamp,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "KBStats":
        return cls(**{k: d.get(k, 0) for k in
                      ("pages", "redirects", "disambiguations", "links",
                       "categories", "dropped_links")},
                   build_timestamp=d.get("build_timestamp", ""))


def title_key(title: str) -> str:
    """Lookup key: first character case-folded, rest exact (wiki convention)."""
    t = " ".join(title.replace("_", " ").split())
    return t[:1].lower() + t[1:] if t else t
