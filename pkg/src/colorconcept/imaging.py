"""Image normalization to 100x100 CIELAB grids and spatial window masks.

Every image is resampled (bilinear, aspect ratio ignored) to a fixed
100x100 grid and converted per pixel from sRGB to Lab. Feature evaluation
then restricts to one of six windows: centered crops covering 20/40/60/80/100
percent of the area, or the figural region found by a morphological
Chan-Vese active contour initialized at the image boundary.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
from PIL import Image
from scipy import ndimage

from .color import D65_XYZ, SRGB_TO_XYZ, _DELTA3, _DELTA

GRID = 100
WINDOW_PERCENTS = (20, 40, 60, 80, 100)
WINDOW_KINDS = ("w20", "w40", "w60", "w80", "w100", "seg")
DEFAULT_SEGMENT_ITERATIONS = 500
DEFAULT_SEGMENT_SMOOTHING = 1


@dataclass(frozen=True)
class NormalizedImage:
    """A 100x100 row-major grid of Lab pixels."""

    lab: np.ndarray  # float64, shape (GRID, GRID, 3)

    def __post_init__(self):
        if self.lab.shape != (GRID, GRID, 3):
            raise ValueError(f"expected ({GRID}, {GRID}, 3) grid, got {self.lab.shape}")
        if not np.all(np.isfinite(self.lab)):
            raise ValueError("normalized image contains non-finite pixels")


@dataclass(frozen=True)
class WindowMask:
    """Boolean pixel subset of an image grid; kind is one of WINDOW_KINDS."""

    kind: str
    mask: np.ndarray  # bool, same height/width as the image it applies to

    def __post_init__(self):
        if self.kind not in WINDOW_KINDS:
            raise ValueError(f"unknown window kind: {self.kind!r}")
        if self.mask.dtype != np.bool_:
            raise ValueError("mask must be boolean")
        if not self.mask.any():
            raise ValueError("window mask must contain at least one pixel")


def srgb_array_to_lab(rgb: np.ndarray) -> np.ndarray:
    """Vectorized sRGB (..., 3) uint8 -> Lab (..., 3) float64 under D65."""
    v = np.asarray(rgb, dtype=np.float64) / 255.0
    lin = np.where(v <= 0.04045, v / 12.92, ((v + 0.055) / 1.055) ** 2.4)
    m = np.asarray(SRGB_TO_XYZ)
    xyz = lin @ m.T
    t = xyz / np.asarray(D65_XYZ)
    f = np.where(t > _DELTA3, np.cbrt(t), t / (3.0 * _DELTA * _DELTA) + 4.0 / 29.0)
    lab = np.empty_like(f)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


def normalize_image(data: bytes) -> NormalizedImage:
    """Decode an encoded image, resample to 100x100, convert to Lab."""
    try:
        with Image.open(io.BytesIO(data)) as im:
            im = im.convert("RGB")
            im = im.resize((GRID, GRID), Image.Resampling.BILINEAR)
            rgb = np.asarray(im, dtype=np.uint8)
    except Exception as exc:
        raise ValueError(f"cannot decode image: {exc}") from exc
    return NormalizedImage(lab=srgb_array_to_lab(rgb))


def _round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


def center_window(percent: int) -> WindowMask:
    """Centered square covering the given percent of total image area.

    The side is round(GRID * sqrt(percent/100)), rounding half away from
    zero, so masks are bit-stable; percent=100 covers the whole grid.
    """
    if percent not in WINDOW_PERCENTS:
        raise ValueError(f"percent must be one of {WINDOW_PERCENTS}, got {percent}")
    side = _round_half_away(GRID * math.sqrt(percent / 100.0))
    start = (GRID - side) // 2
    mask = np.zeros((GRID, GRID), dtype=bool)
    mask[start:start + side, start:start + side] = True
    return WindowMask(kind=f"w{percent}", mask=mask)


def center_windows() -> dict[str, WindowMask]:
    return {f"w{p}": center_window(p) for p in WINDOW_PERCENTS}


# 3x3 line structuring elements for the morphological curvature operators
_LINE_SES = (
    np.eye(3, dtype=bool),
    np.array([[0, 1, 0]] * 3, dtype=bool),
    np.flipud(np.eye(3)).astype(bool),
    np.rot90(np.array([[0, 1, 0]] * 3)).astype(bool),
)


def _sup_inf(u: np.ndarray) -> np.ndarray:
    return np.stack([ndimage.binary_erosion(u, se) for se in _LINE_SES]).max(0).astype(np.int8)


def _inf_sup(u: np.ndarray) -> np.ndarray:
    return np.stack([ndimage.binary_dilation(u, se) for se in _LINE_SES]).min(0).astype(np.int8)


def morphological_acwe(image: np.ndarray, iterations: int, init_level_set: np.ndarray,
                       smoothing: int = 1) -> np.ndarray:
    """Region-based active contour without edges, morphological variant.

    Each iteration moves pixels toward whichever region mean (inside or
    outside the level set) matches them better, then applies the curvature
    smoothing operator. The two composed smoothing operators alternate with
    per-call state, so results depend only on the arguments; concurrent and
    repeated calls are reproducible.
    """
    u = np.int8(init_level_set > 0)
    if u.shape != image.shape:
        raise ValueError("initial level set shape does not match image")
    phase = 0
    for _ in range(iterations):
        c0 = (image * (1 - u)).sum() / float((1 - u).sum() + 1e-8)
        c1 = (image * u).sum() / float(u.sum() + 1e-8)
        abs_du = np.abs(np.gradient(u)).sum(0)
        aux = abs_du * ((image - c1) ** 2 - (image - c0) ** 2)
        u[aux < 0] = 1
        u[aux > 0] = 0
        for _ in range(smoothing):
            if phase == 0:
                u = _sup_inf(_inf_sup(u))
            else:
                u = _inf_sup(_sup_inf(u))
            phase ^= 1
    return u


def segment_figure(img, iterations: int = DEFAULT_SEGMENT_ITERATIONS,
                   smoothing: int = DEFAULT_SEGMENT_SMOOTHING) -> WindowMask:
    """Figural region from a region-based active contour on the L channel.

    The level set starts as the full frame (contour on the image boundary)
    and evolves for the given number of iterations. Degenerate results (a
    constant image, or an empty evolved mask) fall back to the full frame.
    """
    lab = img.lab if isinstance(img, NormalizedImage) else np.asarray(img, dtype=float)
    if lab.ndim != 3 or lab.shape[-1] != 3:
        raise ValueError(f"expected (H, W, 3) Lab array, got {lab.shape}")
    h, w = lab.shape[:2]
    full = np.ones((h, w), dtype=bool)
    if np.ptp(lab.reshape(-1, 3), axis=0).max() == 0.0:
        return WindowMask(kind="seg", mask=full)
    init = np.ones((h, w), dtype=np.int8)
    init[0, :] = init[-1, :] = 0
    init[:, 0] = init[:, -1] = 0
    level = morphological_acwe(lab[..., 0] / 100.0, iterations=iterations,
                               init_level_set=init, smoothing=smoothing)
    mask = level.astype(bool)
    if not mask.any():
        return WindowMask(kind="seg", mask=full)
    return WindowMask(kind="seg", mask=mask)


def mask_to_png(mask: WindowMask, path) -> None:
    """Debug export: mask as 0/255 grayscale PNG."""
    Image.fromarray(mask.mask.astype(np.uint8) * 255, mode="L").save(path, format="PNG")
