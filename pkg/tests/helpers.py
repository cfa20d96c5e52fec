"""Shared fixture builders: synthetic corpora with planted color signals."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from colorconcept.color import lab_to_srgb
from colorconcept.datasets import ColorTable, RatingsTable


def palette_rgb(table: ColorTable) -> np.ndarray:
    """8-bit sRGB renderings of every palette entry, shape (n, 3)."""
    return np.array([[c.r, c.g, c.b] for c in (lab_to_srgb(e.lab) for e in table.entries)],
                    dtype=np.uint8)


def labs_to_rgb8(labs: np.ndarray) -> np.ndarray:
    """Vectorized inverse of the sRGB->Lab conversion, gamut-clipped."""
    labs = np.asarray(labs, dtype=float)
    fy = (labs[..., 0] + 16.0) / 116.0
    f = np.stack([fy + labs[..., 1] / 500.0, fy, fy - labs[..., 2] / 200.0], axis=-1)
    delta = 6.0 / 29.0
    t = np.where(f > delta, f**3, 3.0 * delta * delta * (f - 4.0 / 29.0))
    xyz = t * np.array([0.95047, 1.0, 1.08883])
    minv = np.array([[3.2404542, -1.5371385, -0.4985314],
                     [-0.9692660, 1.8760108, 0.0415560],
                     [0.0556434, -0.2040259, 1.0572252]])
    lin = np.clip(xyz @ minv.T, 0.0, 1.0)
    srgb = np.where(lin <= 0.0031308, 12.92 * lin, 1.055 * lin ** (1 / 2.4) - 0.055)
    return np.clip(np.rint(srgb * 255.0), 0, 255).astype(np.uint8)


def apportion(weights: np.ndarray, total: int) -> np.ndarray:
    """Integer counts summing to `total`, proportional to `weights`
    (largest-remainder rounding)."""
    raw = weights / weights.sum() * total
    base = np.floor(raw).astype(int)
    order = np.argsort(-(raw - base), kind="stable")
    base[order[:total - base.sum()]] += 1
    return base


def write_planted_corpus(root: Path, table: ColorTable, ratings: np.ndarray,
                         concepts, n_images: int, side: int = 100,
                         noise: float = 0.0) -> Path:
    """Build a corpus whose pixel mixtures are proportional to the given
    ratings rows: concept i's images consist of palette colors drawn with
    frequency ratings[i, j]. Pixel placement is shuffled deterministically
    per image; optional Gaussian Lab jitter makes the pixel clouds
    photo-like instead of exact palette spikes."""
    root = Path(root)
    rgb = palette_rgb(table)
    labs = table.labs()
    for ci, concept in enumerate(concepts):
        cdir = root / concept
        cdir.mkdir(parents=True, exist_ok=True)
        counts = apportion(np.asarray(ratings[ci], dtype=float), side * side)
        base = np.repeat(np.arange(len(table)), counts)
        for img_i in range(n_images):
            rng = np.random.default_rng(100_000 + 1000 * ci + img_i)
            pix = base.copy()
            rng.shuffle(pix)
            if noise > 0.0:
                jittered = labs[pix] + rng.normal(scale=noise, size=(pix.size, 3))
                arr = labs_to_rgb8(jittered).reshape(side, side, 3)
            else:
                arr = rgb[pix].reshape(side, side, 3)
            Image.fromarray(arr, "RGB").save(cdir / f"{img_i + 1:02d}.png")
    return root


def planted_ratings(table: ColorTable, concepts, seed: int = 7,
                    exponent: float = 3.0,
                    row_sum: float | None = 8.0) -> RatingsTable:
    """Random ratings with a spiky per-concept profile (a few strongly
    associated colors, like photographs of colorful objects). row_sum
    rescales every row to a common total so planted pixel fractions stay
    globally proportional to the ratings."""
    rng = np.random.default_rng(seed)
    values = rng.uniform(0.05, 1.0, size=(len(concepts), len(table))) ** exponent
    if row_sum is not None:
        values = values / values.sum(axis=1, keepdims=True) * row_sum
    if values.max() > 1.0:
        raise ValueError("planted ratings exceed 1; lower row_sum")
    return RatingsTable(concepts=tuple(concepts), colors=table, values=values)


def write_solid_corpus(root: Path, concepts, n_images: int,
                       colors_rgb, side: int = 60) -> Path:
    """Minimal corpus of solid-color images (one color per concept)."""
    root = Path(root)
    for ci, concept in enumerate(concepts):
        cdir = root / concept
        cdir.mkdir(parents=True, exist_ok=True)
        r, g, b = colors_rgb[ci % len(colors_rgb)]
        arr = np.full((side, side, 3), (r, g, b), dtype=np.uint8)
        for img_i in range(n_images):
            shaded = arr.copy()
            shaded[: 5 + img_i] = np.clip(arr[: 5 + img_i].astype(int) + 10 * img_i, 0, 255)
            Image.fromarray(shaded, "RGB").save(cdir / f"{img_i + 1:02d}.png")
    return root
