"""Per-material persistence: slide fragments are flushed as they complete;
the merged material-level graph is published atomically."""

from __future__ import annotations

import json
import os
from pathlib import Path

from .errors import NotFoundError
from .graph import EduKG, export_jsonl, parse_jsonl


class MaterialStore:
    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _dir(self, material_id: str) -> Path:
        return self.root / material_id

    def exists(self, material_id: str) -> bool:
        return self._dir(material_id).is_dir()

    def start_material(self, material_id: str, name: str) -> None:
        """Reset outputs so a retried build overwrites any partial state."""
        d = self._dir(material_id)
        d.mkdir(parents=True, exist_ok=True)
        for f in d.glob("slide_*.jsonl"):
            f.unlink()
        merged = d / "material.jsonl"
        if merged.exists():
            merged.unlink()
        (d / "meta.json").write_text(json.dumps(
            {"material_id": material_id, "name": name, "slide_texts": []}))

    def write_fragment(self, material_id: str, slide_no: int, fragment: EduKG) -> None:
        path = self._dir(material_id) / f"slide_{slide_no:04d}.jsonl"
        tmp = path.with_suffix(".tmp")
        tmp.write_bytes(export_jsonl(fragment))
        os.replace(tmp, path)

    def write_meta(self, material_id: str, name: str, slide_texts: list[str]) -> None:
        d = self._dir(material_id)
        tmp = d / "meta.json.tmp"
        tmp.write_text(json.dumps({"material_id": material_id, "name": name,
                                   "slide_texts": slide_texts}))
        os.replace(tmp, d / "meta.json")

    def write_material(self, material_id: str, kg: EduKG) -> None:
        path = self._dir(material_id) / "material.jsonl"
        tmp = path.with_suffix(".tmp")
        tmp.write_bytes(export_jsonl(kg))
        os.replace(tmp, path)  # publish atomically

    def slide_numbers(self, material_id: str) -> list[int]:
        if not self.exists(material_id):
            raise NotFoundError(f"unknown material {material_id}")
        return sorted(int(f.stem.split("_")[1])
                      for f in self._dir(material_id).glob("slide_*.jsonl"))

    def read_fragment(self, material_id: str, slide_no: int) -> EduKG:
        path = self._dir(material_id) / f"slide_{slide_no:04d}.jsonl"
        if not path.exists():
            raise NotFoundError(f"no fragment for slide {slide_no} of {material_id}")
        return parse_jsonl(path.read_bytes())

    def material_ready(self, material_id: str) -> bool:
        return (self._dir(material_id) / "material.jsonl").exists()

    def read_material(self, material_id: str) -> EduKG:
        path = self._dir(material_id) / "material.jsonl"
        if not self.exists(material_id):
            raise NotFoundError(f"unknown material {material_id}")
        if not path.exists():
            raise NotFoundError(f"material-level graph for {material_id} not ready")
        return parse_jsonl(path.read_bytes())

    def read_material_bytes(self, material_id: str) -> bytes:
        return (self._dir(material_id) / "material.jsonl").read_bytes()

    def meta(self, material_id: str) -> dict:
        path = self._dir(material_id) / "meta.json"
        if not path.exists():
            raise NotFoundError(f"unknown material {material_id}")
        return json.loads(path.read_text())
