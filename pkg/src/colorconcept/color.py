"""Colorimetric value types and conversions among sRGB, CIE 1931 xyY, CIELAB,
and CIELch.

All conversions are pure functions on small frozen value types. Angles are in
degrees throughout. Lab coordinates are relative to an explicit white point;
the sRGB path assumes the standard sRGB transfer function and D65.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# CIE f(t) threshold constant
_DELTA = 6.0 / 29.0
_DELTA3 = _DELTA**3

# sRGB linear RGB -> XYZ (D65, 2 degree observer), and the D65 white in XYZ
SRGB_TO_XYZ = (
    (0.4124564, 0.3575761, 0.1804375),
    (0.2126729, 0.7151522, 0.0721750),
    (0.0193339, 0.1191920, 0.9503041),
)
D65_XYZ = (0.95047, 1.0, 1.08883)


@dataclass(frozen=True)
class XyY:
    """CIE 1931 chromaticity (x, y) plus luminance Y."""

    x: float
    y: float
    Y: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.Y)):
            raise ValueError(f"non-finite xyY components: {self}")
        if self.Y < 0:
            raise ValueError(f"negative luminance: {self.Y}")
        if self.Y > 0 and self.y <= 0:
            raise ValueError("y chromaticity must be positive when Y > 0")


@dataclass(frozen=True)
class WhitePoint:
    """Reference white in xyY; Y must be positive."""

    x: float
    y: float
    Y: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.Y)):
            raise ValueError(f"non-finite white point: {self}")
        if self.Y <= 0 or self.y <= 0:
            raise ValueError("white point requires Y > 0 and y > 0")


D65 = WhitePoint(0.3127, 0.3290, 100.0)


@dataclass(frozen=True)
class LabColor:
    """CIELAB coordinates: lightness L plus opponent axes a (green-red) and
    b (blue-yellow)."""

    L: float
    a: float
    b: float


@dataclass(frozen=True)
class LchColor:
    """Cylindrical CIELAB: lightness L, chroma c >= 0, hue angle h in
    [0, 360) degrees. Achromatic colors carry the conventional hue 0."""

    L: float
    c: float
    h: float

    def __post_init__(self):
        if self.c < 0:
            raise ValueError(f"negative chroma: {self.c}")
        if not 0.0 <= self.h < 360.0:
            raise ValueError(f"hue angle outside [0, 360): {self.h}")


@dataclass(frozen=True)
class Rgb8:
    """8-bit sRGB-encoded channel values."""

    r: int
    g: int
    b: int

    def __post_init__(self):
        for v in (self.r, self.g, self.b):
            if not 0 <= v <= 255:
                raise ValueError(f"channel outside [0, 255]: {self}")


def _f(t: float) -> float:
    # CIE lightness companding with the linear segment below (6/29)^3
    if t > _DELTA3:
        return t ** (1.0 / 3.0)
    return t / (3.0 * _DELTA * _DELTA) + 4.0 / 29.0


def xyz_to_lab(X: float, Y: float, Z: float, wp: WhitePoint) -> LabColor:
    """Convert CIE XYZ (same scale as wp.Y) to CIELAB relative to wp."""
    Xn = wp.x * wp.Y / wp.y
    Yn = wp.Y
    Zn = (1.0 - wp.x - wp.y) * wp.Y / wp.y
    fx = _f(X / Xn)
    fy = _f(Y / Yn)
    fz = _f(Z / Zn)
    return LabColor(116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz))


def xyy_to_lab(c: XyY, wp: WhitePoint) -> LabColor:
    """Convert xyY to CIELAB relative to the given white point."""
    if c.Y == 0.0:
        X = Y = Z = 0.0
    else:
        X = c.x * c.Y / c.y
        Y = c.Y
        Z = (1.0 - c.x - c.y) * c.Y / c.y
    return xyz_to_lab(X, Y, Z, wp)


def srgb_linearize(v: float) -> float:
    """Decode one sRGB channel in [0, 1] to linear light."""
    if v <= 0.04045:
        return v / 12.92
    return ((v + 0.055) / 1.055) ** 2.4


def srgb_delinearize(v: float) -> float:
    """Encode one linear channel in [0, 1] to sRGB."""
    if v <= 0.0031308:
        return 12.92 * v
    return 1.055 * v ** (1.0 / 2.4) - 0.055


def srgb_to_lab(c: Rgb8) -> LabColor:
    """Convert 8-bit sRGB to CIELAB under D65.

    This is the conventional monitor-agnostic approximation: sRGB transfer
    function, D65 primaries, Lab relative to the D65 white.
    """
    rl = srgb_linearize(c.r / 255.0)
    gl = srgb_linearize(c.g / 255.0)
    bl = srgb_linearize(c.b / 255.0)
    m = SRGB_TO_XYZ
    X = m[0][0] * rl + m[0][1] * gl + m[0][2] * bl
    Y = m[1][0] * rl + m[1][1] * gl + m[1][2] * bl
    Z = m[2][0] * rl + m[2][1] * gl + m[2][2] * bl
    Xn, Yn, Zn = D65_XYZ
    fx = _f(X / Xn)
    fy = _f(Y / Yn)
    fz = _f(Z / Zn)
    return LabColor(116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz))


def lab_to_srgb(c: LabColor) -> Rgb8:
    """Invert srgb_to_lab, clipping to the 8-bit gamut."""
    fy = (c.L + 16.0) / 116.0
    fx = fy + c.a / 500.0
    fz = fy - c.b / 200.0

    def finv(f: float) -> float:
        if f > _DELTA:
            return f**3
        return 3.0 * _DELTA * _DELTA * (f - 4.0 / 29.0)

    Xn, Yn, Zn = D65_XYZ
    X, Y, Z = finv(fx) * Xn, finv(fy) * Yn, finv(fz) * Zn
    # inverse of SRGB_TO_XYZ
    rl = 3.2404542 * X - 1.5371385 * Y - 0.4985314 * Z
    gl = -0.9692660 * X + 1.8760108 * Y + 0.0415560 * Z
    bl = 0.0556434 * X - 0.2040259 * Y + 1.0572252 * Z
    channels = []
    for v in (rl, gl, bl):
        v = srgb_delinearize(min(max(v, 0.0), 1.0))
        channels.append(min(max(int(round(v * 255.0)), 0), 255))
    return Rgb8(*channels)


def lab_to_lch(c: LabColor) -> LchColor:
    """Rectangular to cylindrical CIELAB. Achromatic colors get hue 0."""
    chroma = math.sqrt(c.a * c.a + c.b * c.b)
    if chroma == 0.0:
        return LchColor(c.L, 0.0, 0.0)
    h = math.degrees(math.atan2(c.b, c.a)) % 360.0
    if h == 360.0:  # guard against rounding at the seam
        h = 0.0
    return LchColor(c.L, chroma, h)


def lch_to_lab(c: LchColor) -> LabColor:
    """Cylindrical back to rectangular CIELAB."""
    h = math.radians(c.h)
    return LabColor(c.L, c.c * math.cos(h), c.c * math.sin(h))


def delta_e_76(p: LabColor, q: LabColor) -> float:
    """CIE 1976 color difference: Euclidean distance in Lab."""
    dl = p.L - q.L
    da = p.a - q.a
    db = p.b - q.b
    return math.sqrt(dl * dl + da * da + db * db)


def hue_delta(h1: float, h2: float) -> float:
    """Minimal angular difference between two hue angles, in [0, 180]."""
    if not (math.isfinite(h1) and math.isfinite(h2)):
        raise ValueError("hue angles must be finite")
    d = abs(h1 - h2) % 360.0
    return min(d, 360.0 - d)
