"""Built-in color palettes and ingestion of rating tables.

Two palettes ship embedded: a 58-color set sampled on a uniform CIELAB grid
(spacing 25) and the 37-color Berkeley set, each with its own white point.
Rating tables are concept-by-color matrices of mean association strengths in
[0, 1], loaded from CSV (header = concept names, first column = color index).
"""

from __future__ import annotations

import csv
import importlib.resources
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _tables
from .color import D65, LabColor, LchColor, WhitePoint, XyY, lab_to_lch, xyy_to_lab

FRUIT_CONCEPTS = (
    "mango", "watermelon", "honeydew", "cantaloupe", "grapefruit",
    "strawberry", "raspberry", "blueberry", "avocado", "orange",
    "lime", "lemon",
)


@dataclass(frozen=True)
class ColorEntry:
    index: int
    label: str
    xyy: XyY
    lab: LabColor
    lch: LchColor
    white_point: WhitePoint


@dataclass(frozen=True)
class ColorTable:
    """Ordered palette of target colors with a shared white point."""

    name: str
    entries: tuple[ColorEntry, ...]

    def __post_init__(self):
        indices = [e.index for e in self.entries]
        if indices != list(range(1, len(indices) + 1)):
            raise ValueError(f"{self.name}: indices must be contiguous from 1")

    def __len__(self) -> int:
        return len(self.entries)

    def labs(self) -> np.ndarray:
        """(n, 3) array of Lab coordinates in table order."""
        return np.array([[e.lab.L, e.lab.a, e.lab.b] for e in self.entries])

    def lchs(self) -> np.ndarray:
        """(n, 3) array of (L, c, h) in table order."""
        return np.array([[e.lch.L, e.lch.c, e.lch.h] for e in self.entries])

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "label", "x", "y", "Y", "L", "a", "b", "c", "h"])
            for e in self.entries:
                writer.writerow([
                    e.index, e.label,
                    repr(e.xyy.x), repr(e.xyy.y), repr(e.xyy.Y),
                    repr(e.lab.L), repr(e.lab.a), repr(e.lab.b),
                    repr(e.lch.c), repr(e.lch.h),
                ])


@dataclass(frozen=True)
class ConceptSet:
    """Nonempty set of unique concept names (the image query terms)."""

    names: tuple[str, ...]

    def __post_init__(self):
        if not self.names:
            raise ValueError("concept set must be nonempty")
        if len(set(self.names)) != len(self.names):
            raise ValueError("concept names must be unique")


@dataclass(frozen=True)
class RatingsTable:
    """Concept-by-color matrix of mean association ratings in [0, 1]."""

    concepts: tuple[str, ...]
    colors: ColorTable
    values: np.ndarray  # shape (n_concepts, n_colors)

    def __post_init__(self):
        if self.values.shape != (len(self.concepts), len(self.colors)):
            raise ValueError(
                f"ratings shape {self.values.shape} does not match "
                f"{len(self.concepts)} concepts x {len(self.colors)} colors")
        if np.any(~np.isfinite(self.values)):
            raise ValueError("ratings contain non-finite cells")
        if np.any(self.values < 0.0) or np.any(self.values > 1.0):
            raise ValueError("ratings must lie in [0, 1]")

    def rating(self, concept: str, color_index: int) -> float:
        return float(self.values[self.concepts.index(concept), color_index - 1])


def _build_table(name: str, rows, wp_tuple) -> ColorTable:
    wp = WhitePoint(*wp_tuple)
    entries = []
    for i, (label, x, y, Y, L, a, b, c, h) in enumerate(rows, start=1):
        entries.append(ColorEntry(
            index=i,
            label=label,
            xyy=XyY(x, y, Y),
            lab=LabColor(float(L), float(a), float(b)),
            lch=LchColor(float(L), float(c), float(h)),
            white_point=wp,
        ))
    return ColorTable(name=name, entries=tuple(entries))


def builtin_uw58() -> ColorTable:
    """The 58-color uniform-grid palette (D65 white point, Y = 100)."""
    return _build_table("uw58", _tables.UW58_ROWS, _tables.UW58_WHITE_POINT)


def builtin_bcp37() -> ColorTable:
    """The 37-color Berkeley palette (white point 0.312, 0.318, 116)."""
    return _build_table("bcp37", _tables.BCP37_ROWS, _tables.BCP37_WHITE_POINT)


def builtin_table(name: str) -> ColorTable:
    if name == "uw58":
        return builtin_uw58()
    if name == "bcp37":
        return builtin_bcp37()
    raise ValueError(f"unknown built-in color table: {name!r}")


def check_table_consistency(table: ColorTable, tol: float = 0.05, hue_tol: float = 0.1) -> None:
    """Verify each entry's Lab/Lch agree with its xyY under the table's
    white point, within tol per channel and hue_tol degrees.

    Hue is only checked for entries with published chroma above tol
    (hue is undefined at the achromatic axis).
    """
    for e in table.entries:
        lab = xyy_to_lab(e.xyy, e.white_point)
        lch = lab_to_lch(lab)
        errs = {
            "L": abs(lab.L - e.lab.L),
            "a": abs(lab.a - e.lab.a),
            "b": abs(lab.b - e.lab.b),
            "c": abs(lch.c - e.lch.c),
        }
        bad = {k: v for k, v in errs.items() if v > tol}
        if e.lch.c > tol:
            dh = abs(lch.h - e.lch.h) % 360.0
            dh = min(dh, 360.0 - dh)
            if dh > hue_tol:
                bad["h"] = dh
        if bad:
            raise ValueError(f"{table.name} entry {e.index} ({e.label}) "
                             f"inconsistent across spaces: {bad}")


def load_color_table(path: str | Path, name: str | None = None,
                     white_point: WhitePoint = D65) -> ColorTable:
    """Load a palette from CSV with columns index,label,x,y,Y,L,a,b,c,h.

    The file format carries no white point; pass the one the Lab columns
    were computed under (default D65). Cross-space consistency is enforced.
    """
    path = Path(path)
    entries = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"index", "label", "x", "y", "Y", "L", "a", "b", "c", "h"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"{path}: expected columns {sorted(required)}")
        for row in reader:
            entries.append(ColorEntry(
                index=int(row["index"]),
                label=row["label"],
                xyy=XyY(float(row["x"]), float(row["y"]), float(row["Y"])),
                lab=LabColor(float(row["L"]), float(row["a"]), float(row["b"])),
                lch=LchColor(float(row["L"]), float(row["c"]), float(row["h"])),
                white_point=white_point,
            ))
    table = ColorTable(name=name or path.stem, entries=tuple(entries))
    check_table_consistency(table)
    return table


def load_ratings(path: str | Path, colors: ColorTable) -> RatingsTable:
    """Load a ratings CSV: header of concept names, one row per color index.

    Rejects values outside [0, 1], malformed cells, missing columns, and any
    dimension mismatch with the color table.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty ratings file") from None
        header = [h.strip() for h in header]
        if len(header) < 2:
            raise ValueError(f"{path}: header must name at least one concept")
        concepts = tuple(header[1:])
        if len(set(concepts)) != len(concepts):
            raise ValueError(f"{path}: duplicate concept columns")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
            try:
                idx = int(row[0].strip())
                vals = [float(c.strip()) for c in row[1:]]
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: malformed cell ({exc})") from None
            for v in vals:
                if not math.isfinite(v) or v < 0.0 or v > 1.0:
                    raise ValueError(f"{path}:{lineno}: rating {v} outside [0, 1]")
            rows.append((idx, vals))
    if [idx for idx, _ in rows] != [e.index for e in colors.entries]:
        raise ValueError(
            f"{path}: color indices do not match table {colors.name!r} "
            f"({len(rows)} rows vs {len(colors)} colors)")
    values = np.array([vals for _, vals in rows]).T  # -> concept x color
    return RatingsTable(concepts=concepts, colors=colors, values=values)


def save_ratings(table: RatingsTable, path: str | Path) -> None:
    """Write a ratings table back to the canonical CSV layout."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["color_index", *table.concepts])
        for j, entry in enumerate(table.colors.entries):
            writer.writerow([entry.index] + [repr(float(v)) for v in table.values[:, j]])


def fruit_ratings_path() -> Path:
    """Path to the shipped 12-fruit x 58-color mean ratings CSV."""
    return Path(importlib.resources.files("colorconcept.data") / "fruit_ratings.csv")


def builtin_fruit_ratings() -> RatingsTable:
    """The shipped fruit ratings against the 58-color palette."""
    return load_ratings(fruit_ratings_path(), builtin_uw58())
