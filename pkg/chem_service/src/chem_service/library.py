"""Template library and stock index loading."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .canon import canonicalize
from .mol import SmilesError
from .templates import Template, parse_template

LIBRARY_VERSION = 1


@dataclass(frozen=True)
class LibraryEntry:
    template: Template
    prior: float


class TemplateLibrary:
    def __init__(self, entries: list[LibraryEntry], version_hash: str):
        self.entries = entries
        self.version_hash = version_hash

    @classmethod
    def load(cls, path) -> "TemplateLibrary":
        raw = Path(path).read_bytes()
        doc = json.loads(raw)
        if doc.get("version") != LIBRARY_VERSION:
            raise ValueError(f"unsupported template library version {doc.get('version')!r}")
        entries = []
        for spec in doc["templates"]:
            template = parse_template(spec["id"], spec["pattern"])
            prior = float(spec.get("prior", 1.0))
            if prior <= 0:
                raise ValueError(f"{spec['id']}: prior must be positive")
            entries.append(LibraryEntry(template=template, prior=prior))
        version_hash = hashlib.sha256(raw).hexdigest()[:16]
        return cls(entries, version_hash)


class StockIndex:
    """Canonicalized molecule set with canonicalization-invariant lookups."""

    def __init__(self, members: set[str]):
        self.members = frozenset(members)

    @classmethod
    def load(cls, path) -> "StockIndex":
        members = set()
        for line in Path(path).read_text().splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            members.add(canonicalize(line))
        return cls(members)

    def __contains__(self, smiles: str) -> bool:
        try:
            return canonicalize(smiles) in self.members
        except SmilesError:
            return False

    def __len__(self) -> int:
        return len(self.members)
