"""Local knowledge base built from a wiki XML dump."""

from .records import KBRecord, KBStats
from .dump import preprocess_dump, strip_markup, DumpParseError
from .store import KBStore

__all__ = ["KBRecord", "KBStats", "KBStore", "preprocess_dump",
           "strip_markup", "DumpParseError"]
