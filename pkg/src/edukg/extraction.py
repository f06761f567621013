"""Layout-aware conversion of positioned page elements into ordered text segments.

Input is the positioned-elements JSON format (or a PDF via the optional
adapter). Recurring fragments (footers, page numbers) are detected across
pages and dropped; the remaining elements are merged into sentence/bullet
segments using font-size, spacing, and bullet-marker rules.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .errors import ConfigurationError, ParseError

NOISE_BUCKET_PT = 5.0

BULLET_GLYPHS = "•◦▪"  # • ◦ ▪
_bullet_prefix_re = re.compile(
    r"^\s*(?:[•◦▪\-–*]|\d{1,3}\.|[A-Za-z]\))\s+")
_embedded_bullet_re = re.compile(r"[•◦▪]")
_non_alpha_re = re.compile(r"[^a-z]+")


@dataclass(frozen=True)
class PositionedElement:
    page_no: int
    text: str
    bbox: tuple[float, float, float, float]  # x0, y0, x1, y1; y grows upward
    font_size: float
    kind: str = "text"  # text | graphic

    @property
    def width(self) -> float:
        return self.bbox[2] - self.bbox[0]

    @property
    def height(self) -> float:
        return self.bbox[3] - self.bbox[1]

    @property
    def area(self) -> float:
        return self.width * self.height


@dataclass
class Page:
    page_no: int
    elements: list[PositionedElement] = field(default_factory=list)


@dataclass
class PageSet:
    pages: list[Page] = field(default_factory=list)

    @property
    def page_count(self) -> int:
        return len(self.pages)


@dataclass(frozen=True)
class Segment:
    text: str
    role: str  # content | figure_caption | noise


@dataclass
class SegmentList:
    page_no: int
    segments: list[Segment] = field(default_factory=list)


@dataclass
class MaterialText:
    slide_texts: list[str]
    material_text: str


@dataclass(frozen=True)
class SegmentationConfig:
    font_split_pt: float = 0.5
    gap_factor: float = 1.5
    bullet_area_max: float = 60.0  # pt^2
    bullet_baseline_tol: float = 2.0  # pt


def ingest(document, format: str = "elements-json") -> PageSet:
    """Load a document into a PageSet. `document` may be bytes, str, or a
    parsed dict for elements-json; a file path for pdf."""
    if format == "elements-json":
        if isinstance(document, (bytes, str)):
            try:
                data = json.loads(document)
            except json.JSONDecodeError as exc:
                raise ParseError(f"malformed elements JSON: {exc.msg}",
                                 line=exc.lineno, column=exc.colno) from exc
        elif isinstance(document, dict):
            data = document
        else:
            raise ConfigurationError(f"unsupported document payload: {type(document)!r}")
        return _pageset_from_dict(data)
    if format == "pdf":
        return _ingest_pdf(document)
    raise ConfigurationError(f"unsupported format: {format!r}")


def _pageset_from_dict(data: dict) -> PageSet:
    pages = []
    for i, page in enumerate(data.get("pages", []), start=1):
        page_no = int(page.get("page_no", i))
        elements = []
        for el in page.get("elements", []):
            bbox = tuple(float(c) for c in el["bbox"])
            if len(bbox) != 4 or bbox[0] > bbox[2] or bbox[1] > bbox[3]:
                raise ParseError(f"invalid bbox {bbox} on page {page_no}")
            elements.append(PositionedElement(
                page_no=page_no,
                text=el.get("text", ""),
                bbox=bbox,
                font_size=float(el.get("font_size", 0.0)),
                kind=el.get("kind", "text"),
            ))
        pages.append(Page(page_no=page_no, elements=elements))
    return PageSet(pages=pages)


def _ingest_pdf(path) -> PageSet:
    try:
        from pdfminer.high_level import extract_pages
        from pdfminer.layout import LTTextLine, LTTextContainer, LTFigure, LTRect, LTCurve
    except ImportError as exc:
        raise ConfigurationError(
            "PDF input requires the optional pdfminer.six adapter") from exc
    pages = []
    for page_no, layout in enumerate(extract_pages(str(path)), start=1):
        elements = []
        def walk(obj):
            if isinstance(obj, LTTextLine):
                sizes = [c.size for c in obj if hasattr(c, "size")]
                elements.append(PositionedElement(
                    page_no=page_no, text=obj.get_text().strip(),
                    bbox=tuple(obj.bbox),
                    font_size=sorted(sizes)[len(sizes) // 2] if sizes else 0.0))
            elif isinstance(obj, (LTRect, LTCurve)):
                elements.append(PositionedElement(
                    page_no=page_no, text="", bbox=tuple(obj.bbox),
                    font_size=0.0, kind="graphic"))
            elif isinstance(obj, (LTTextContainer, LTFigure)):
                for child in obj:
                    walk(child)
        for obj in layout:
            walk(obj)
        pages.append(Page(page_no=page_no, elements=elements))
    return PageSet(pages=pages)


def normalize_fragment(text: str) -> str:
    """Lowercase and strip everything non-alphabetical."""
    return _non_alpha_re.sub("", text.lower())


def location_bucket(bbox) -> tuple[int, int, int, int]:
    return tuple(round(c / NOISE_BUCKET_PT) for c in bbox)


def detect_recurring_noise(pages: PageSet) -> set[tuple[tuple, str]]:
    """Fragments recurring at the same spot on more than half of the pages
    (or on >= 5 pages when the document has fewer than ten) are noise."""
    seen: dict[tuple[tuple, str], set[int]] = {}
    for page in pages.pages:
        for el in page.elements:
            if el.kind != "text":
                continue
            key = (location_bucket(el.bbox), normalize_fragment(el.text))
            seen.setdefault(key, set()).add(page.page_no)
    n = pages.page_count
    noise = set()
    for key, on_pages in seen.items():
        k = len(on_pages)
        if k > n / 2 or (n < 10 and k >= 5):
            noise.add(key)
    return noise


def _reading_order(elements):
    return sorted(elements, key=lambda el: (-round(el.bbox[3]), el.bbox[0]))


def _is_graphic_bullet(g: PositionedElement, texts, cfg: SegmentationConfig):
    """Small graphic sitting just left of a text element's baseline band."""
    if g.area >= cfg.bullet_area_max:
        return None
    gy = (g.bbox[1] + g.bbox[3]) / 2
    for el in texts:
        if (g.bbox[2] <= el.bbox[0] + cfg.bullet_baseline_tol
                and el.bbox[1] - cfg.bullet_baseline_tol <= gy <= el.bbox[3] + cfg.bullet_baseline_tol):
            return el
    return None


def _overlaps(a, b) -> bool:
    return not (a[2] <= b[0] or b[2] <= a[0] or a[3] <= b[1] or b[3] <= a[1])


def _should_split(prev: PositionedElement, cur: PositionedElement,
                  cfg: SegmentationConfig) -> bool:
    if abs(prev.font_size - cur.font_size) > cfg.font_split_pt:
        return True
    # Vertical gap between prev's bottom and cur's top (reading top-down).
    v_gap = prev.bbox[1] - cur.bbox[3]
    if v_gap > 0:
        line_height = max(prev.height, cur.height)
        if line_height > 0 and v_gap > cfg.gap_factor * line_height:
            return True
    else:
        # Same line: horizontal spacing against estimated character width.
        h_gap = cur.bbox[0] - prev.bbox[2]
        if h_gap > 0 and prev.text:
            char_width = prev.width / max(len(prev.text), 1)
            if h_gap > cfg.gap_factor * char_width:
                return True
    return False


def segment(page: Page, noise: set, rules: SegmentationConfig | None = None) -> SegmentList:
    """Split one page into ordered content/figure_caption/noise segments."""
    cfg = rules or SegmentationConfig()
    texts = [el for el in page.elements if el.kind == "text"]
    graphics = [el for el in page.elements if el.kind != "text"]

    noisy, clean = [], []
    for el in texts:
        key = (location_bucket(el.bbox), normalize_fragment(el.text))
        (noisy if key in noise else clean).append(el)

    bullet_targets: set[int] = set()
    figures = []
    for g in graphics:
        target = _is_graphic_bullet(g, clean, cfg)
        if target is not None:
            bullet_targets.add(id(target))
        else:
            figures.append(g)

    captions, body = [], []
    for el in clean:
        if any(_overlaps(el.bbox, g.bbox) for g in figures):
            captions.append(el)
        else:
            body.append(el)

    segments: list[Segment] = []
    current: list[str] = []

    def flush():
        if current:
            text = " ".join(current).strip()
            if text:
                segments.append(Segment(text=text, role="content"))
            current.clear()

    prev = None
    for el in _reading_order(body):
        starts_new = (
            prev is None
            or id(el) in bullet_targets
            or _bullet_prefix_re.match(el.text) is not None
            or _should_split(prev, el, cfg)
        )
        if starts_new:
            flush()
        # Embedded bullet glyphs separate sentences within one element.
        parts = [p for p in _embedded_bullet_re.split(el.text)]
        for j, part in enumerate(parts):
            if j > 0:
                flush()
            if part.strip():
                current.append(part.strip())
        prev = el
    flush()

    for el in _reading_order(captions):
        if el.text.strip():
            segments.append(Segment(text=el.text.strip(), role="figure_caption"))
    for el in _reading_order(noisy):
        segments.append(Segment(text=el.text, role="noise"))

    return SegmentList(page_no=page.page_no, segments=segments)


def extract_material_text(pages: PageSet, noise: set,
                          rules: SegmentationConfig | None = None) -> MaterialText:
    """Per-slide content text plus the concatenated whole-material text."""
    slide_texts = []
    for page in pages.pages:
        seglist = segment(page, noise, rules)
        slide_texts.append(" ".join(
            s.text for s in seglist.segments if s.role == "content"))
    material_text = "\n".join(slide_texts)
    return MaterialText(slide_texts=slide_texts, material_text=material_text)
