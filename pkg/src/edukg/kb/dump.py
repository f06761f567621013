"""Streaming preprocessing of a MediaWiki XML export into KB records.

Handles the export subset: mediawiki/page/title/id/redirect@title/revision/
text. Extracts wikilinks, categories, redirects, disambiguation flags, and a
markup-stripped abstract per article, then precomputes embeddings.
"""

from __future__ import annotations

import datetime
import io
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass

from ..embedding import EmbeddingProvider
from ..errors import DataError, ParseError
from .records import KBRecord, KBStats, title_key
from .store import KBStore


class DumpParseError(ParseError):
    pass


_redirect_re = re.compile(r"^\s*#REDIRECT\s*\[\[([^\]|#]+)", re.IGNORECASE)
_link_re = re.compile(r"\[\[([^\[\]|#]+)(?:\|[^\[\]]*)?\]\]")
_category_re = re.compile(r"\[\[Category:([^\]|]+)(?:\|[^\]]*)?\]\]", re.IGNORECASE)
_disambig_re = re.compile(r"\{\{\s*disambig", re.IGNORECASE)
_heading_re = re.compile(r"^==", re.MULTILINE)

_comment_re = re.compile(r"<!--.*?-->", re.DOTALL)
_ref_re = re.compile(r"<ref[^>/]*/>|<ref[^>]*>.*?</ref>", re.DOTALL)
_template_re = re.compile(r"\{\{[^{}]*\}\}")
_file_re = re.compile(r"\[\[(?:File|Image):[^\[\]]*\]\]", re.IGNORECASE)
_catlink_re = re.compile(r"\[\[Category:[^\]]*\]\]", re.IGNORECASE)
_piped_link_re = re.compile(r"\[\[[^\[\]|]*\|([^\[\]]*)\]\]")
_plain_link_re = re.compile(r"\[\[([^\[\]]*)\]\]")
_quotes_re = re.compile(r"'{2,}")

_NAMESPACE_PREFIXES = ("category:", "file:", "image:", "wikipedia:", "template:", "help:")


@dataclass
class RawPage:
    page_id: int
    title: str
    text: str
    redirect_title: str | None


def _localname(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def iter_pages(xml) -> "list[RawPage]":
    """Stream pages from the export. Accepts bytes, str, or a binary stream."""
    if isinstance(xml, str):
        xml = xml.encode("utf-8")
    if isinstance(xml, bytes):
        xml = io.BytesIO(xml)
    pages = []
    try:
        for event, elem in ET.iterparse(xml, events=("end",)):
            if _localname(elem.tag) != "page":
                continue
            title, page_id, text, redirect_title = None, None, "", None
            for child in elem.iter():
                name = _localname(child.tag)
                if name == "title" and title is None:
                    title = child.text or ""
                elif name == "id" and page_id is None:
                    page_id = int(child.text)
                elif name == "redirect":
                    redirect_title = child.attrib.get("title")
                elif name == "text":
                    text = child.text or ""
            if title is None or page_id is None:
                raise DumpParseError(f"page element missing title or id (page #{len(pages) + 1})")
            pages.append(RawPage(page_id=page_id, title=title, text=text,
                                 redirect_title=redirect_title))
            elem.clear()
    except ET.ParseError as exc:
        line, column = exc.position
        raise DumpParseError("malformed dump XML", line=line, column=column) from exc
    return pages


def strip_markup(wikitext: str) -> str:
    """Plain text for an abstract: templates, refs, files, links, quote
    markup removed; whitespace collapsed."""
    text = _comment_re.sub("", wikitext)
    text = _ref_re.sub("", text)
    for _ in range(10):  # nested templates, innermost first
        stripped = _template_re.sub("", text)
        if stripped == text:
            break
        text = stripped
    for _ in range(10):
        stripped = _file_re.sub("", text)
        if stripped == text:
            break
        text = stripped
    text = _catlink_re.sub("", text)
    text = _piped_link_re.sub(r"\1", text)
    text = _plain_link_re.sub(r"\1", text)
    text = _quotes_re.sub("", text)
    return " ".join(text.split())


def extract_abstract(wikitext: str) -> str:
    """Markup-stripped text before the first section heading."""
    m = _heading_re.search(wikitext)
    head = wikitext[:m.start()] if m else wikitext
    return strip_markup(head)


def _is_disambiguation(title: str, text: str) -> bool:
    return title.endswith(" (disambiguation)") or bool(_disambig_re.search(text))


def preprocess_dump(xml, embedder: EmbeddingProvider, store_path) -> KBStats:
    """Build the KB store from an XML export; returns build statistics."""
    raw_pages = iter_pages(xml)

    by_key: dict[str, int] = {}
    for rp in raw_pages:
        by_key.setdefault(title_key(rp.title), rp.page_id)

    redirect_target: dict[int, int | None] = {}
    for rp in raw_pages:
        target_title = rp.redirect_title
        if target_title is None:
            m = _redirect_re.match(rp.text)
            if m:
                target_title = m.group(1)
        if target_title is not None:
            redirect_target[rp.page_id] = by_key.get(title_key(target_title))

    def resolve(pid: int, depth: int = 5) -> int | None:
        seen = set()
        while pid in redirect_target:
            if pid in seen:
                raise DataError(f"redirect cycle involving page {pid}")
            if depth <= 0:
                return None
            seen.add(pid)
            depth -= 1
            nxt = redirect_target[pid]
            if nxt is None:
                return None
            pid = nxt
        return pid

    stats = KBStats(build_timestamp=datetime.datetime.now(datetime.timezone.utc)
                    .isoformat(timespec="seconds"))
    records: dict[int, KBRecord] = {}
    all_categories: set[str] = set()

    for rp in sorted(raw_pages, key=lambda p: p.page_id):
        stats.pages += 1
        if rp.page_id in redirect_target:
            stats.redirects += 1
            records[rp.page_id] = KBRecord(
                page_id=rp.page_id, title=" ".join(rp.title.split()),
                redirect_to=resolve(rp.page_id),
                abstract_embedding=embedder.embed(""))
            continue

        disambig = _is_disambiguation(rp.title, rp.text)
        if disambig:
            stats.disambiguations += 1

        out_links: list[int] = []
        seen_links: set[int] = set()
        for m in _link_re.finditer(rp.text):
            target = m.group(1).strip()
            if target.lower().startswith(_NAMESPACE_PREFIXES):
                continue
            pid = by_key.get(title_key(target))
            pid = resolve(pid) if pid is not None else None
            if pid is None or pid == rp.page_id:
                stats.dropped_links += 1
                continue
            if pid not in seen_links:
                seen_links.add(pid)
                out_links.append(pid)
        stats.links += len(out_links)

        categories = []
        for m in _category_re.finditer(rp.text):
            name = " ".join(m.group(1).split())
            if name and name not in categories:
                categories.append(name)
        all_categories.update(categories)

        abstract = extract_abstract(rp.text)
        records[rp.page_id] = KBRecord(
            page_id=rp.page_id, title=" ".join(rp.title.split()),
            abstract=abstract, out_links=out_links, categories=categories,
            is_disambiguation=disambig,
            abstract_embedding=embedder.embed(abstract))

    stats.categories = len(all_categories)
    category_embeddings = {name: embedder.embed(name)
                           for name in sorted(all_categories)}

    KBStore.build(records, category_embeddings, stats, store_path)
    return stats
