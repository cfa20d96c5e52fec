"""Declarative feature catalog and design-matrix assembly.

A feature quantifies the presence of a target color in one spatial window of
an image: ball features count pixels within a Euclidean Lab distance of the
target, sector features bound hue and chroma/lightness separately in
cylindrical coordinates, and category features count pixels sharing the
target's basic color term (extrapolating to unseen shades). The full catalog
is 186 features: 5 ball tolerances x 6 windows, 25 sector tolerance pairs x 6
windows, and 6 category windows.
"""

from __future__ import annotations

import hashlib
import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .categories import CategoryModel, TERMS, categorize_image, categorize_index, default_category_model
from .color import LabColor, LchColor
from .corpus import CorpusManifest
from .datasets import ColorTable, RatingsTable
from .imaging import (DEFAULT_SEGMENT_ITERATIONS, DEFAULT_SEGMENT_SMOOTHING,
                      NormalizedImage, WindowMask, center_windows,
                      normalize_image, segment_figure)

BALL_TOLERANCES = (1, 10, 20, 30, 40)
SECTOR_TOLERANCES = (1, 10, 20, 30, 40)
HUE_TOLERANCES = (5, 10, 20, 30, 40)
WINDOWS = ("w20", "w40", "w60", "w80", "w100", "seg")
STAGES = ("ball_only", "ball_sector", "full")


@dataclass(frozen=True)
class FeatureSpec:
    kind: str  # "ball" | "sector" | "category"
    window: str
    dr: int | None = None
    dh: int | None = None

    def __post_init__(self):
        if self.window not in WINDOWS:
            raise ValueError(f"unknown window: {self.window!r}")
        if self.kind == "ball":
            if self.dr not in BALL_TOLERANCES or self.dh is not None:
                raise ValueError(f"invalid ball feature: {self}")
        elif self.kind == "sector":
            if self.dr not in SECTOR_TOLERANCES or self.dh not in HUE_TOLERANCES:
                raise ValueError(f"invalid sector feature: {self}")
        elif self.kind == "category":
            if self.dr is not None or self.dh is not None:
                raise ValueError(f"invalid category feature: {self}")
        else:
            raise ValueError(f"unknown feature kind: {self.kind!r}")


def feature_id(spec: FeatureSpec) -> str:
    suffix = "seg" if spec.window == "seg" else spec.window
    if spec.kind == "ball":
        return f"ball_dr{spec.dr}_{suffix}"
    if spec.kind == "sector":
        return f"sector_dr{spec.dr}_dh{spec.dh}_{suffix}"
    return f"cat_{suffix}"


def parse_feature_id(s: str) -> FeatureSpec:
    parts = s.split("_")
    try:
        window = parts[-1]
        if parts[0] == "ball" and len(parts) == 3 and parts[1].startswith("dr"):
            return FeatureSpec(kind="ball", dr=int(parts[1][2:]), window=window)
        if parts[0] == "sector" and len(parts) == 4 and parts[1].startswith("dr") \
                and parts[2].startswith("dh"):
            return FeatureSpec(kind="sector", dr=int(parts[1][2:]),
                               dh=int(parts[2][2:]), window=window)
        if parts[0] == "cat" and len(parts) == 2:
            return FeatureSpec(kind="category", window=window)
    except ValueError:
        pass
    raise ValueError(f"unknown feature id: {s!r}")


@dataclass(frozen=True)
class FeatureCatalog:
    stage: str
    specs: tuple[FeatureSpec, ...]

    def __post_init__(self):
        if len(set(self.specs)) != len(self.specs):
            raise ValueError("duplicate feature specs in catalog")

    def __len__(self) -> int:
        return len(self.specs)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(feature_id(s) for s in self.specs)


def catalog(stage: str) -> FeatureCatalog:
    """Canonical catalogs: 30 ball features, +150 sector, +6 category."""
    if stage not in STAGES:
        raise ValueError(f"stage must be one of {STAGES}, got {stage!r}")
    specs = [FeatureSpec(kind="ball", dr=dr, window=w)
             for dr in BALL_TOLERANCES for w in WINDOWS]
    if stage in ("ball_sector", "full"):
        specs += [FeatureSpec(kind="sector", dr=dr, dh=dh, window=w)
                  for dr in SECTOR_TOLERANCES for dh in HUE_TOLERANCES
                  for w in WINDOWS]
    if stage == "full":
        specs += [FeatureSpec(kind="category", window=w) for w in WINDOWS]
    return FeatureCatalog(stage=stage, specs=tuple(specs))


def _lab_pixels(img) -> np.ndarray:
    lab = img.lab if isinstance(img, NormalizedImage) else np.asarray(img, dtype=float)
    if lab.ndim == 2 and lab.shape[-1] == 3:
        return lab
    if lab.ndim == 3 and lab.shape[-1] == 3:
        return lab.reshape(-1, 3)
    raise ValueError(f"expected (H, W, 3) or (N, 3) Lab pixels, got {lab.shape}")


def _mask_flat(mask, n_pixels: int) -> np.ndarray:
    m = mask.mask if isinstance(mask, WindowMask) else np.asarray(mask)
    m = m.reshape(-1).astype(bool)
    if m.shape[0] != n_pixels:
        raise ValueError(f"mask covers {m.shape[0]} pixels, image has {n_pixels}")
    if not m.any():
        raise ValueError("mask must contain at least one pixel")
    return m


def eval_ball(img, mask, target: LabColor, dr: float) -> float:
    """Fraction of masked pixels within Lab distance dr of the target."""
    px = _lab_pixels(img)
    m = _mask_flat(mask, px.shape[0])
    sel = px[m]
    dl = sel[:, 0] - target.L
    da = sel[:, 1] - target.a
    db = sel[:, 2] - target.b
    dist = np.sqrt(dl * dl + da * da + db * db)
    return int((dist <= dr).sum()) / sel.shape[0]


def eval_sector(img, mask, target: LchColor, dr: float, dh: float) -> float:
    """Fraction of masked pixels inside the cylindrical sector around the
    target: |L| and |c| within dr and hue within dh. For achromatic targets
    (c == 0) the hue condition is vacuous."""
    px = _lab_pixels(img)
    m = _mask_flat(mask, px.shape[0])
    sel = px[m]
    pc = np.sqrt(sel[:, 1] * sel[:, 1] + sel[:, 2] * sel[:, 2])
    ok = (np.abs(sel[:, 0] - target.L) <= dr) & (np.abs(pc - target.c) <= dr)
    if target.c != 0.0:
        ph = np.degrees(np.arctan2(sel[:, 2], sel[:, 1])) % 360.0
        d = np.abs(ph - target.h) % 360.0
        ok &= np.minimum(d, 360.0 - d) <= dh
    return int(ok.sum()) / sel.shape[0]


def eval_category(img, mask, target_term: str, model: CategoryModel) -> float:
    """Fraction of masked pixels whose basic color term equals target_term."""
    if target_term not in TERMS:
        raise ValueError(f"unknown basic color term: {target_term!r}")
    px = _lab_pixels(img)
    m = _mask_flat(mask, px.shape[0])
    grid = categorize_image(model, px[m])
    return int((grid == TERMS.index(target_term)).sum()) / int(m.sum())


def _bucketize(values: np.ndarray, thresholds) -> np.ndarray:
    """Index of the smallest threshold covering each value (inclusive <=);
    len(thresholds) means above all of them."""
    out = np.zeros(values.shape, dtype=np.uint8)
    for t in thresholds:
        out += values > t
    return out


def _per_color_histogram(codes: np.ndarray, mask: np.ndarray, n_bins: int) -> np.ndarray:
    """Histogram the per-(pixel, color) codes under a pixel mask.

    codes: (n_pixels, n_colors) small ints; returns (n_colors, n_bins) counts.
    """
    sub = codes[mask]
    n_colors = codes.shape[1]
    offset = sub.astype(np.int64) + n_bins * np.arange(n_colors, dtype=np.int64)[None, :]
    flat = np.bincount(offset.ravel(), minlength=n_bins * n_colors)
    return flat.reshape(n_colors, n_bins)


def feature_block(lab, masks, specs, colors: ColorTable,
                  category_model: CategoryModel | None = None,
                  target_terms: np.ndarray | None = None) -> np.ndarray:
    """Evaluate `specs` for one image against every color of the table.

    lab: (H, W, 3) or (N, 3) Lab pixels; masks: window kind -> boolean array.
    Returns an (n_colors, n_specs) array of fractions in [0, 1].

    Pixels are bucketed once per tolerance axis and counted per window with
    integer histograms, so results are exactly the per-pixel fractions the
    eval_* functions produce.
    """
    px = _lab_pixels(lab)
    n = px.shape[0]
    flat = {w: _mask_flat(m, n) for w, m in masks.items()}
    for w in {s.window for s in specs}:
        if w not in flat:
            raise ValueError(f"no mask supplied for window {w!r}")

    need_ball = any(s.kind == "ball" for s in specs)
    need_sector = any(s.kind == "sector" for s in specs)
    need_cat = any(s.kind == "category" for s in specs)

    ball_codes = sector_codes = grid = None
    n_dr = len(BALL_TOLERANCES) + 1
    n_dh = len(HUE_TOLERANCES) + 1
    if need_ball:
        labs = colors.labs()
        dl = px[:, 0][:, None] - labs[None, :, 0]
        da = px[:, 1][:, None] - labs[None, :, 1]
        db = px[:, 2][:, None] - labs[None, :, 2]
        dist = np.sqrt(dl * dl + da * da + db * db)
        ball_codes = _bucketize(dist, BALL_TOLERANCES)
    if need_sector:
        lchs = colors.lchs()
        pc = np.sqrt(px[:, 1] * px[:, 1] + px[:, 2] * px[:, 2])
        ph = np.degrees(np.arctan2(px[:, 2], px[:, 1])) % 360.0
        d_l = np.abs(px[:, 0][:, None] - lchs[None, :, 0])
        d_c = np.abs(pc[:, None] - lchs[None, :, 1])
        b_lc = np.maximum(_bucketize(d_l, SECTOR_TOLERANCES),
                          _bucketize(d_c, SECTOR_TOLERANCES))
        d = np.abs(ph[:, None] - lchs[None, :, 2]) % 360.0
        b_h = _bucketize(np.minimum(d, 360.0 - d), HUE_TOLERANCES)
        b_h[:, lchs[:, 1] == 0.0] = 0  # achromatic target: hue is vacuous
        sector_codes = b_lc * n_dh + b_h
    if need_cat:
        if category_model is None:
            category_model = default_category_model()
        grid = categorize_image(category_model, px)
        if target_terms is None:
            target_terms = np.array(
                [categorize_index(category_model, e.lab) for e in colors.entries])

    out = np.empty((len(colors), len(specs)))
    for w in {s.window for s in specs}:
        mw = flat[w]
        m = int(mw.sum())
        cols = [(i, s) for i, s in enumerate(specs) if s.window == w]
        if need_ball and any(s.kind == "ball" for _, s in cols):
            hist = _per_color_histogram(ball_codes, mw, n_dr)
            cum = hist.cumsum(axis=1)
            for i, s in cols:
                if s.kind == "ball":
                    out[:, i] = cum[:, BALL_TOLERANCES.index(s.dr)] / m
        if need_sector and any(s.kind == "sector" for _, s in cols):
            hist = _per_color_histogram(sector_codes, mw, n_dr * n_dh)
            cum = hist.reshape(-1, n_dr, n_dh).cumsum(axis=1).cumsum(axis=2)
            for i, s in cols:
                if s.kind == "sector":
                    out[:, i] = cum[:, SECTOR_TOLERANCES.index(s.dr),
                                    HUE_TOLERANCES.index(s.dh)] / m
        if need_cat and any(s.kind == "category" for _, s in cols):
            counts = np.bincount(grid[mw], minlength=len(TERMS))
            for i, s in cols:
                if s.kind == "category":
                    out[:, i] = counts[target_terms] / m
    return out


@dataclass(frozen=True)
class DesignMatrix:
    """Feature values with one row per (concept, image rank, color index)."""

    rows: tuple[tuple[str, int, int], ...]
    X: np.ndarray
    feature_ids: tuple[str, ...]
    y: np.ndarray | None = None
    stage: str | None = None

    def __post_init__(self):
        if self.X.shape != (len(self.rows), len(self.feature_ids)):
            raise ValueError(f"X shape {self.X.shape} does not match "
                             f"{len(self.rows)} rows x {len(self.feature_ids)} features")
        if not np.all(np.isfinite(self.X)):
            raise ValueError("design matrix contains non-finite entries")
        if self.X.size and (self.X.min() < 0.0 or self.X.max() > 1.0):
            raise ValueError("feature values must lie in [0, 1]")
        if self.y is not None and self.y.shape != (len(self.rows),):
            raise ValueError("response vector length does not match rows")

    @property
    def concepts(self) -> tuple[str, ...]:
        return tuple(sorted({c for c, _, _ in self.rows}))

    def concept_row_mask(self, concept: str) -> np.ndarray:
        return np.array([c == concept for c, _, _ in self.rows])

    def restrict_concepts(self, keep) -> "DesignMatrix":
        keep = set(keep)
        sel = np.array([c in keep for c, _, _ in self.rows])
        return DesignMatrix(
            rows=tuple(r for r, s in zip(self.rows, sel) if s),
            X=self.X[sel],
            feature_ids=self.feature_ids,
            y=self.y[sel] if self.y is not None else None,
            stage=self.stage,
        )

    def restrict_features(self, ids) -> "DesignMatrix":
        """Column subset, e.g. to compare smaller catalogs on one matrix."""
        ids = tuple(ids)
        missing = [fid for fid in ids if fid not in self.feature_ids]
        if missing:
            raise ValueError(f"features not in matrix: {missing}")
        cols = [self.feature_ids.index(fid) for fid in ids]
        return DesignMatrix(rows=self.rows, X=self.X[:, cols], feature_ids=ids,
                            y=self.y, stage=_stage_for_ids(ids))

    def to_csv_text(self) -> str:
        header = ["concept", "rank", "color_index", *self.feature_ids]
        if self.y is not None:
            header.append("y")
        lines = [",".join(header)]
        for i, (concept, rank, color_index) in enumerate(self.rows):
            cells = [concept, str(rank), str(color_index)]
            cells += [repr(float(v)) for v in self.X[i]]
            if self.y is not None:
                cells.append(repr(float(self.y[i])))
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> str:
        """Write the CSV; returns its sha256 hex digest."""
        text = self.to_csv_text()
        Path(path).write_text(text)
        return hashlib.sha256(text.encode()).hexdigest()


def load_design_matrix(path: str | Path) -> DesignMatrix:
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:3] != ["concept", "rank", "color_index"]:
            raise ValueError(f"{path}: not a design-matrix CSV")
        has_y = header[-1] == "y"
        ids = tuple(header[3:-1] if has_y else header[3:])
        for fid in ids:
            parse_feature_id(fid)
        rows, xs, ys = [], [], []
        for row in reader:
            if not row:
                continue
            rows.append((row[0], int(row[1]), int(row[2])))
            vals = [float(v) for v in row[3:]]
            if has_y:
                xs.append(vals[:-1])
                ys.append(vals[-1])
            else:
                xs.append(vals)
    return DesignMatrix(rows=tuple(rows), X=np.array(xs), feature_ids=ids,
                        y=np.array(ys) if has_y else None)


def _stage_for_ids(ids) -> str | None:
    for stage in STAGES:
        if tuple(catalog(stage).ids) == tuple(ids):
            return stage
    return None


def _image_masks(img: NormalizedImage, windows, centers,
                 segment_iterations: int, segment_smoothing: int):
    masks = {}
    for w in windows:
        if w == "seg":
            masks[w] = segment_figure(img, iterations=segment_iterations,
                                      smoothing=segment_smoothing).mask
        else:
            masks[w] = centers[w].mask
    return masks


def build_design_matrix(manifest: CorpusManifest, colors: ColorTable,
                        feature_set, category_model: CategoryModel | None = None,
                        ratings: RatingsTable | None = None, jobs: int = 1,
                        segment_iterations: int = DEFAULT_SEGMENT_ITERATIONS,
                        segment_smoothing: int = DEFAULT_SEGMENT_SMOOTHING) -> DesignMatrix:
    """Evaluate a catalog (or any spec sequence) over a corpus.

    Rows are emitted in canonical (concept, rank, color index) order
    regardless of manifest order or parallelism degree. When ratings are
    given, y holds the matching mean rating repeated across each concept's
    images.
    """
    if isinstance(feature_set, FeatureCatalog):
        specs, stage = feature_set.specs, feature_set.stage
    else:
        specs, stage = tuple(feature_set), None
    records = sorted(manifest.records, key=lambda r: (r.concept, r.rank))
    if not records:
        raise ValueError("manifest contains no records")
    if ratings is not None:
        missing = set(r.concept for r in records) - set(ratings.concepts)
        if missing:
            raise ValueError(f"concepts missing from ratings: {sorted(missing)}")

    windows = {s.window for s in specs}
    centers = center_windows()
    needs_model = any(s.kind == "category" for s in specs)
    if needs_model and category_model is None:
        category_model = default_category_model()
    target_terms = None
    if needs_model:
        target_terms = np.array(
            [categorize_index(category_model, e.lab) for e in colors.entries])

    def work(record):
        try:
            img = normalize_image(record.path.read_bytes())
        except (OSError, ValueError) as exc:
            raise ValueError(f"cannot featurize {record.path}: {exc}") from exc
        masks = _image_masks(img, windows, centers,
                             segment_iterations, segment_smoothing)
        return feature_block(img, masks, specs, colors,
                             category_model=category_model,
                             target_terms=target_terms)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            blocks = list(pool.map(work, records))
    else:
        blocks = [work(r) for r in records]

    rows = []
    ys = [] if ratings is not None else None
    for record in records:
        for entry in colors.entries:
            rows.append((record.concept, record.rank, entry.index))
        if ys is not None:
            ci = ratings.concepts.index(record.concept)
            ys.extend(ratings.values[ci, :].tolist())
    X = np.vstack(blocks)
    return DesignMatrix(rows=tuple(rows), X=X,
                        feature_ids=tuple(feature_id(s) for s in specs),
                        y=np.array(ys) if ys is not None else None,
                        stage=stage)
