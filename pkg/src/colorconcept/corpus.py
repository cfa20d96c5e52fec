"""Image corpus scanning, fetching, and manifest management.

The canonical corpus layout is root/<concept>/<name>.<jpg|jpeg|png>; rank is
the 1-based position in lexicographic filename order. Fetchers download (or
copy) images into that layout; only a local-directory fetcher ships here,
with web providers left as an extension point.
"""

from __future__ import annotations

import json
import shutil
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

from PIL import Image

ACCEPTED_EXTENSIONS = (".jpg", ".jpeg", ".png")
PROVENANCE_TAGS = ("top_search", "photo", "cartoon", "custom")


@dataclass(frozen=True)
class ImageRecord:
    concept: str
    rank: int
    path: Path
    provenance: str

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError(f"rank must be positive: {self.rank}")
        if self.provenance not in PROVENANCE_TAGS:
            raise ValueError(f"unknown provenance tag: {self.provenance!r}")


@dataclass(frozen=True)
class CorpusManifest:
    records: tuple[ImageRecord, ...]
    extensions: tuple[str, ...] = ACCEPTED_EXTENSIONS
    skipped: dict = field(default_factory=dict)  # concept -> undecodable count

    def __post_init__(self):
        keys = [(r.concept, r.rank) for r in self.records]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate (concept, rank) in manifest")

    @property
    def concepts(self) -> tuple[str, ...]:
        return tuple(sorted({r.concept for r in self.records}))

    def by_concept(self, concept: str) -> tuple[ImageRecord, ...]:
        return tuple(r for r in self.records if r.concept == concept)

    def to_json(self) -> str:
        doc = {
            "extensions": list(self.extensions),
            "skipped": {k: v for k, v in sorted(self.skipped.items()) if v},
            "records": [
                {"concept": r.concept, "rank": r.rank, "path": str(r.path),
                 "provenance": r.provenance}
                for r in self.records
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())


def load_manifest(path: str | Path) -> CorpusManifest:
    doc = json.loads(Path(path).read_text())
    records = tuple(
        ImageRecord(concept=r["concept"], rank=int(r["rank"]),
                    path=Path(r["path"]), provenance=r["provenance"])
        for r in doc["records"]
    )
    return CorpusManifest(records=records,
                          extensions=tuple(doc.get("extensions", ACCEPTED_EXTENSIONS)),
                          skipped=dict(doc.get("skipped", {})))


def _decodes(path: Path) -> bool:
    try:
        with Image.open(path) as im:
            im.verify()
        return True
    except Exception:
        return False


def scan_corpus(root: str | Path, limit: int,
                provenance: str = "custom") -> CorpusManifest:
    """Scan root/<concept>/* into a manifest, up to `limit` images per concept.

    Rank is assigned in lexicographic filename order over the readable
    images. Undecodable files are skipped with a warning and counted; a
    concept directory with zero readable images is an error.
    """
    root = Path(root)
    if limit < 1:
        raise ValueError(f"image limit must be >= 1, got {limit}")
    if not root.is_dir():
        raise FileNotFoundError(f"corpus root does not exist: {root}")
    concept_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if not concept_dirs:
        raise ValueError(f"no concept directories under {root}")
    records: list[ImageRecord] = []
    skipped: dict[str, int] = {}
    for cdir in concept_dirs:
        concept = cdir.name
        files = sorted(p for p in cdir.iterdir()
                       if p.is_file() and p.suffix.lower() in ACCEPTED_EXTENSIONS)
        rank = 0
        bad = 0
        for f in files:
            if rank >= limit:
                break
            if not _decodes(f):
                bad += 1
                warnings.warn(f"skipping undecodable image: {f}")
                continue
            rank += 1
            records.append(ImageRecord(concept=concept, rank=rank,
                                       path=f.resolve(), provenance=provenance))
        skipped[concept] = bad
        if rank == 0:
            raise ValueError(f"concept {concept!r} has no readable images under {cdir}")
    return CorpusManifest(records=tuple(records), skipped=skipped)


class FetcherInterface(Protocol):
    """Source of concept images. Implementations return the source files for
    one concept in rank order; fetch() copies them into the canonical layout.
    """

    provenance: str

    def retrieve(self, concept: str, limit: int) -> list[Path]:
        ...


@dataclass
class LocalDirectoryFetcher:
    """Fetcher backed by a local mirror tree in the canonical layout."""

    source_root: Path
    provenance: str = "custom"

    def retrieve(self, concept: str, limit: int) -> list[Path]:
        cdir = Path(self.source_root) / concept
        if not cdir.is_dir():
            return []
        files = sorted(p for p in cdir.iterdir()
                       if p.is_file() and p.suffix.lower() in ACCEPTED_EXTENSIONS)
        return files[:limit]


def fetch(provider: FetcherInterface, concepts, limit: int,
          dest: str | Path) -> CorpusManifest:
    """Materialize images from a provider into dest/<concept>/NNN.<ext> and
    scan the result."""
    if limit < 1:
        raise ValueError(f"image limit must be >= 1, got {limit}")
    names = concepts.names if hasattr(concepts, "names") else tuple(concepts)
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    for concept in names:
        try:
            sources = provider.retrieve(concept, limit)
        except Exception as exc:
            raise RuntimeError(f"provider failed for concept {concept!r}: {exc}") from exc
        if not sources:
            raise ValueError(f"provider returned no images for concept {concept!r}")
        cdir = dest / concept
        cdir.mkdir(parents=True, exist_ok=True)
        for i, src in enumerate(sources, start=1):
            shutil.copyfile(src, cdir / f"{i:03d}{src.suffix.lower()}")
    return scan_corpus(dest, limit, provenance=provider.provenance)
