"""On-disk KB store: append-only record file plus index files.

Layout (all files start with the versioned magic bytes):
  records.dat  -- [u32 length][record JSON] entries, sorted by page_id
  titles.idx   -- [u32 length][JSON {title_key: page_id}]
  offsets.idx  -- [u32 count] then [u64 page_id][u64 offset] pairs
  inlinks.idx  -- [u32 length][JSON {page_id: [page_id, ...]}]
  categories.idx -- [u32 length][JSON {name: [float, ...]}]
  stats.json   -- build statistics (carries the timestamp; not part of the
                  store's byte identity)

The store is immutable once built; builds go to a fresh directory and swap in.
"""

from __future__ import annotations

import json
import os
import shutil
import struct
from pathlib import Path

import numpy as np

from ..errors import DataError, NotFoundError
from .records import KBRecord, KBStats, title_key

MAGIC = b"EKGKB01\x00"
MAX_REDIRECT_DEPTH = 5


def _dumps(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _write_block(f, payload: bytes) -> None:
    f.write(struct.pack("<I", len(payload)))
    f.write(payload)


def _read_magic(f, path) -> None:
    if f.read(len(MAGIC)) != MAGIC:
        raise DataError(f"bad magic in {path}")


def _read_block(f) -> bytes:
    (length,) = struct.unpack("<I", f.read(4))
    return f.read(length)


class KBStore:
    def __init__(self, records: dict[int, KBRecord], title_index: dict[str, int],
                 in_links: dict[int, list[int]],
                 category_embeddings: dict[str, np.ndarray], stats: KBStats):
        self._records = records
        self._titles = title_index
        self._in_links = in_links
        self._category_embeddings = category_embeddings
        self.stats = stats

    # -- build / load ------------------------------------------------------

    @classmethod
    def build(cls, records: dict[int, KBRecord],
              category_embeddings: dict[str, np.ndarray],
              stats: KBStats, path) -> "KBStore":
        path = Path(path)
        tmp = path.with_name(path.name + ".build")
        if tmp.exists():
            shutil.rmtree(tmp)
        tmp.mkdir(parents=True)

        ordered = [records[pid] for pid in sorted(records)]
        offsets: list[tuple[int, int]] = []
        with open(tmp / "records.dat", "wb") as f:
            f.write(MAGIC)
            for rec in ordered:
                offsets.append((rec.page_id, f.tell()))
                _write_block(f, _dumps(rec.to_json_dict()))

        with open(tmp / "titles.idx", "wb") as f:
            f.write(MAGIC)
            _write_block(f, _dumps({title_key(r.title): r.page_id for r in ordered}))

        with open(tmp / "offsets.idx", "wb") as f:
            f.write(MAGIC)
            f.write(struct.pack("<I", len(offsets)))
            for pid, off in offsets:
                f.write(struct.pack("<QQ", pid, off))

        in_links: dict[int, list[int]] = {}
        for rec in ordered:
            for target in rec.out_links:
                in_links.setdefault(target, []).append(rec.page_id)
        in_links = {pid: sorted(srcs) for pid, srcs in in_links.items()}
        with open(tmp / "inlinks.idx", "wb") as f:
            f.write(MAGIC)
            _write_block(f, _dumps({str(k): v for k, v in sorted(in_links.items())}))

        with open(tmp / "categories.idx", "wb") as f:
            f.write(MAGIC)
            _write_block(f, _dumps({name: [float(x) for x in vec]
                                    for name, vec in sorted(category_embeddings.items())}))

        (tmp / "stats.json").write_text(json.dumps(stats.to_json_dict(), indent=2))

        if path.exists():
            shutil.rmtree(path)
        os.replace(tmp, path)
        return cls({r.page_id: r for r in ordered},
                   {title_key(r.title): r.page_id for r in ordered},
                   in_links, dict(category_embeddings), stats)

    @classmethod
    def load(cls, path) -> "KBStore":
        path = Path(path)
        if not path.is_dir():
            raise NotFoundError(f"no KB store at {path}")
        records: dict[int, KBRecord] = {}
        with open(path / "records.dat", "rb") as f:
            _read_magic(f, path / "records.dat")
            size = os.fstat(f.fileno()).st_size
            while f.tell() < size:
                rec = KBRecord.from_json_dict(json.loads(_read_block(f)))
                records[rec.page_id] = rec
        with open(path / "titles.idx", "rb") as f:
            _read_magic(f, path / "titles.idx")
            titles = {k: int(v) for k, v in json.loads(_read_block(f)).items()}
        with open(path / "inlinks.idx", "rb") as f:
            _read_magic(f, path / "inlinks.idx")
            in_links = {int(k): v for k, v in json.loads(_read_block(f)).items()}
        with open(path / "categories.idx", "rb") as f:
            _read_magic(f, path / "categories.idx")
            cats = {k: np.asarray(v, dtype=float)
                    for k, v in json.loads(_read_block(f)).items()}
        stats = KBStats.from_json_dict(json.loads((path / "stats.json").read_text()))
        return cls(records, titles, in_links, cats, stats)

    # -- lookups -----------------------------------------------------------

    def get(self, page_id: int) -> KBRecord:
        """Raw record by id, without redirect resolution."""
        rec = self._records.get(page_id)
        if rec is None:
            raise NotFoundError(f"no page with id {page_id}")
        return rec

    def resolve(self, page_id: int) -> KBRecord:
        """Follow redirects (cycle-safe, bounded depth) to the canonical record."""
        rec = self.get(page_id)
        depth = 0
        seen = {rec.page_id}
        while rec.is_redirect:
            depth += 1
            if depth > MAX_REDIRECT_DEPTH:
                raise DataError(f"redirect chain from {page_id} exceeds depth {MAX_REDIRECT_DEPTH}")
            rec = self.get(rec.redirect_to)
            if rec.page_id in seen:
                raise DataError(f"redirect cycle involving page {page_id}")
            seen.add(rec.page_id)
        return rec

    def lookup(self, title_or_id) -> KBRecord:
        if isinstance(title_or_id, int):
            return self.resolve(title_or_id)
        pid = self._titles.get(title_key(title_or_id))
        if pid is None:
            raise NotFoundError(f"no page titled {title_or_id!r}")
        return self.resolve(pid)

    def try_lookup(self, title_or_id) -> KBRecord | None:
        try:
            return self.lookup(title_or_id)
        except NotFoundError:
            return None

    def neighbors(self, page_id: int) -> dict[str, list[int]]:
        """Out- and in-links of a page, excluding redirects and
        disambiguation pages; the union forms the expansion candidate pool."""
        rec = self.get(page_id)

        def eligible(pid: int) -> bool:
            other = self._records.get(pid)
            return (other is not None and not other.is_redirect
                    and not other.is_disambiguation)

        out = [pid for pid in rec.out_links if eligible(pid)]
        inc = [pid for pid in self._in_links.get(page_id, []) if eligible(pid)]
        return {"out_links": out, "in_links": inc}

    def categories_of(self, page_id: int) -> list[tuple[str, np.ndarray]]:
        rec = self.get(page_id)
        return [(name, self._category_embeddings[name]) for name in rec.categories]

    def category_embedding(self, name: str) -> np.ndarray | None:
        return self._category_embeddings.get(name)

    def disambiguation_candidates(self, title: str) -> list[KBRecord]:
        """Articles listed on the disambiguation page for `title`, if any."""
        page = None
        direct = self.try_lookup(title)
        if direct is not None and direct.is_disambiguation:
            page = direct
        else:
            page = self.try_lookup(f"{title} (disambiguation)")
            if page is not None and not page.is_disambiguation:
                page = None
        if page is None:
            return []
        candidates = []
        seen = set()
        for pid in page.out_links:
            try:
                rec = self.resolve(pid)
            except (NotFoundError, DataError):
                continue
            if rec.is_disambiguation or rec.page_id in seen:
                continue
            seen.add(rec.page_id)
            candidates.append(rec)
        return candidates

    def page_ids(self) -> list[int]:
        return sorted(self._records)
