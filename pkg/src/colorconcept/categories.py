"""Basic color term categorization over CIELAB.

A CategoryModel maps any Lab coordinate to one of the 11 English basic color
terms through a dense lookup table quantized at 5 Lab units per axis. The
shipped default compiles a small rule table defined in cylindrical (L, c, h)
coordinates: an achromatic band (c < 10) split into black/gray/white by
lightness, and a hue wheel with brown, pink, and orange carved out by
lightness thresholds. External rule files in the same format can replace it.
"""

from __future__ import annotations

import hashlib
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .color import LabColor

TERMS = ("red", "green", "blue", "yellow", "black", "white",
         "gray", "orange", "purple", "brown", "pink")

# Quantization: cell centers every 5 units, L in [0,100], a and b in [-110,110]
STEP = 5.0
L_CENTERS = 21
AB_CENTERS = 45
AB_MIN = -110.0

# Rule rows: (Lmin, Lmax, cmin, cmax, hmin, hmax, term), half-open ranges,
# first match wins. hmin > hmax means the hue interval wraps through 0.
DEFAULT_RULES = (
    (0.0, 20.0, 0.0, 10.0, 0.0, 360.0, "black"),
    (85.0, 101.0, 0.0, 10.0, 0.0, 360.0, "white"),
    (20.0, 85.0, 0.0, 10.0, 0.0, 360.0, "gray"),
    (70.0, 101.0, 10.0, 1000.0, 330.0, 30.0, "pink"),
    (0.0, 70.0, 10.0, 1000.0, 330.0, 30.0, "red"),
    (0.0, 42.0, 10.0, 1000.0, 30.0, 100.0, "brown"),
    (42.0, 101.0, 10.0, 1000.0, 30.0, 70.0, "orange"),
    (42.0, 101.0, 10.0, 1000.0, 70.0, 100.0, "yellow"),
    (0.0, 101.0, 10.0, 1000.0, 100.0, 185.0, "green"),
    (0.0, 101.0, 10.0, 1000.0, 185.0, 290.0, "blue"),
    (0.0, 101.0, 10.0, 1000.0, 290.0, 330.0, "purple"),
)

_MAGIC = b"CCATLUT1\n"


@dataclass(frozen=True)
class CategoryModel:
    """Total map from quantized Lab cells to basic color terms."""

    lookup: np.ndarray  # uint8, shape (L_CENTERS, AB_CENTERS, AB_CENTERS)
    version: str
    source: str

    def __post_init__(self):
        if self.lookup.shape != (L_CENTERS, AB_CENTERS, AB_CENTERS):
            raise ValueError(f"lookup shape {self.lookup.shape} invalid")
        if self.lookup.max() >= len(TERMS):
            raise ValueError("lookup references unknown term index")

    @property
    def terms(self) -> tuple[str, ...]:
        return TERMS


def _cell_indices(L, a, b):
    """Nearest-cell indices; out-of-range coordinates clamp."""
    i = np.clip(np.rint(np.asarray(L) / STEP).astype(np.intp), 0, L_CENTERS - 1)
    j = np.clip(np.rint((np.asarray(a) - AB_MIN) / STEP).astype(np.intp), 0, AB_CENTERS - 1)
    k = np.clip(np.rint((np.asarray(b) - AB_MIN) / STEP).astype(np.intp), 0, AB_CENTERS - 1)
    return i, j, k


def compile_rules(rules, version: str, source: str) -> CategoryModel:
    """Compile (L, c, h) range rules into the dense Lab cell lookup.

    Raises if any term name is unknown or any cell is left unassigned.
    """
    term_index = {t: i for i, t in enumerate(TERMS)}
    for rule in rules:
        if len(rule) != 7:
            raise ValueError(f"rule must have 7 fields: {rule!r}")
        if rule[6] not in term_index:
            raise ValueError(f"unknown basic color term: {rule[6]!r}")

    Ls = np.arange(L_CENTERS) * STEP
    ab = AB_MIN + np.arange(AB_CENTERS) * STEP
    Lg, ag, bg = np.meshgrid(Ls, ab, ab, indexing="ij")
    cg = np.sqrt(ag * ag + bg * bg)
    hg = np.degrees(np.arctan2(bg, ag)) % 360.0

    lookup = np.full(Lg.shape, 255, dtype=np.uint8)
    for Lmin, Lmax, cmin, cmax, hmin, hmax, term in rules:
        sel = (Lg >= Lmin) & (Lg < Lmax) & (cg >= cmin) & (cg < cmax)
        if hmin <= hmax:
            sel &= (hg >= hmin) & (hg < hmax)
        else:
            sel &= (hg >= hmin) | (hg < hmax)
        sel &= lookup == 255
        lookup[sel] = term_index[term]

    missing = np.argwhere(lookup == 255)
    if missing.size:
        i, j, k = missing[0]
        raise ValueError(
            f"rule table is not total: {missing.shape[0]} unassigned cells, "
            f"e.g. Lab({i * STEP:g}, {AB_MIN + j * STEP:g}, {AB_MIN + k * STEP:g})")
    return CategoryModel(lookup=lookup, version=version, source=source)


_DEFAULT_MODEL: CategoryModel | None = None


def default_category_model() -> CategoryModel:
    """The shipped rule-table model (compiled once, then cached)."""
    global _DEFAULT_MODEL
    if _DEFAULT_MODEL is None:
        _DEFAULT_MODEL = compile_rules(DEFAULT_RULES, version="builtin-1", source="builtin")
    return _DEFAULT_MODEL


def categorize(model: CategoryModel, c: LabColor) -> str:
    """Basic color term for a single Lab color (nearest cell, total)."""
    i, j, k = _cell_indices(c.L, c.a, c.b)
    return TERMS[int(model.lookup[i, j, k])]


def categorize_index(model: CategoryModel, c: LabColor) -> int:
    i, j, k = _cell_indices(c.L, c.a, c.b)
    return int(model.lookup[i, j, k])


def categorize_image(model: CategoryModel, lab_pixels: np.ndarray) -> np.ndarray:
    """Per-pixel term indices for an (..., 3) Lab array."""
    lab = np.asarray(lab_pixels, dtype=float)
    if lab.shape[-1] != 3:
        raise ValueError(f"expected (..., 3) Lab array, got {lab.shape}")
    i, j, k = _cell_indices(lab[..., 0], lab[..., 1], lab[..., 2])
    return model.lookup[i, j, k]


def _parse_rule_row(cells, lineno: int, path):
    if len(cells) != 7:
        raise ValueError(f"{path}:{lineno}: expected 7 fields, got {len(cells)}")
    try:
        nums = [float(c) for c in cells[:6]]
    except ValueError as exc:
        raise ValueError(f"{path}:{lineno}: malformed bound ({exc})") from None
    term = cells[6].strip()
    if term not in TERMS:
        raise ValueError(f"{path}:{lineno}: unknown basic color term {term!r}")
    return (*nums, term)


def load_category_model(path: str | Path) -> CategoryModel:
    """Load and compile a rule-table CSV: Lmin,Lmax,cmin,cmax,hmin,hmax,term.

    A header row is permitted. The compiled model must be total.
    """
    path = Path(path)
    raw = path.read_bytes()
    rules = []
    for lineno, line in enumerate(raw.decode("utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        cells = [c.strip() for c in line.split(",")]
        if lineno == 1 and cells and not _is_number(cells[0]):
            continue  # header
        rules.append(_parse_rule_row(cells, lineno, path))
    if not rules:
        raise ValueError(f"{path}: no rules found")
    digest = hashlib.sha256(raw).hexdigest()[:12]
    return compile_rules(rules, version=f"file-{digest}", source=str(path))


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def save_rules_csv(rules, path: str | Path) -> None:
    with open(path, "w") as fh:
        fh.write("Lmin,Lmax,cmin,cmax,hmin,hmax,term\n")
        for Lmin, Lmax, cmin, cmax, hmin, hmax, term in rules:
            fh.write(f"{Lmin:g},{Lmax:g},{cmin:g},{cmax:g},{hmin:g},{hmax:g},{term}\n")


def save_compiled(model: CategoryModel, path: str | Path) -> None:
    """Cache a compiled model as a binary blob with a version header."""
    meta = json.dumps({"version": model.version, "source": model.source,
                       "terms": TERMS}).encode() + b"\n"
    buf = io.BytesIO()
    np.save(buf, model.lookup)
    Path(path).write_bytes(_MAGIC + meta + buf.getvalue())


def load_compiled(path: str | Path) -> CategoryModel:
    raw = Path(path).read_bytes()
    if not raw.startswith(_MAGIC):
        raise ValueError(f"{path}: not a compiled category model (bad header)")
    rest = raw[len(_MAGIC):]
    meta_line, _, blob = rest.partition(b"\n")
    meta = json.loads(meta_line.decode())
    if tuple(meta.get("terms", ())) != TERMS:
        raise ValueError(f"{path}: term set mismatch")
    lookup = np.load(io.BytesIO(blob))
    return CategoryModel(lookup=lookup, version=meta["version"], source=meta["source"])
