"""Pixel-level primitives shared by every stage of the pipeline.

Images are plain numpy arrays: an RGB raster is a ``(H, W, 3)`` uint8 array,
a grayscale grid is ``(H, W)`` uint8, and a binary mask is ``(H, W)`` bool
with True marking foreground. Glyphs are masks normalized to a fixed square
resolution so they can be compared against reference glyph collections.

All functions here are pure: they never mutate their inputs, so they are safe
to map across images in parallel.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import ndimage

DEFAULT_GLYPH_SIZE = 64

# sRGB <-> CIE XYZ (D65 reference white), IEC 61966-2-1 constants.
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_XYZ_TO_RGB = np.linalg.inv(_RGB_TO_XYZ)
_D65_WHITE = np.array([0.95047, 1.0, 1.08883])
_LAB_DELTA = 6.0 / 29.0

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


class LabColor(NamedTuple):
    """A CIE L*a*b* triple (D65 white point, sRGB source)."""

    L: float
    a: float
    b: float


@dataclass(eq=False)
class GlyphBitmap:
    """A binary glyph normalized to a square grid.

    ``mask`` is a (size, size) bool array with at least one foreground pixel;
    ``char`` is the character label when known, "" otherwise.
    """

    mask: np.ndarray
    char: str = ""

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        if mask.ndim != 2 or mask.shape[0] != mask.shape[1]:
            raise ValueError(f"glyph mask must be square, got shape {mask.shape}")
        if not mask.any():
            raise ValueError("glyph mask has no foreground pixels")
        self.mask = mask

    @property
    def size(self) -> int:
        return self.mask.shape[0]


@dataclass(eq=False)
class Component:
    """One 8-connected foreground component of a binary mask.

    ``pixels`` holds (row, col) coordinates in scan order; ``bbox`` is
    (x, y, w, h) in the coordinates of the source mask.
    """

    pixels: np.ndarray
    bbox: tuple[int, int, int, int] = field(default=(0, 0, 0, 0))

    @property
    def size(self) -> int:
        return len(self.pixels)

    def local_mask(self) -> np.ndarray:
        """Render the component as a tight (h, w) bool mask."""
        x, y, w, h = self.bbox
        out = np.zeros((h, w), dtype=bool)
        out[self.pixels[:, 0] - y, self.pixels[:, 1] - x] = True
        return out


def to_grayscale(img: np.ndarray) -> np.ndarray:
    """Convert an RGB raster to 8-bit luma via round(0.299R + 0.587G + 0.114B)."""
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) RGB array, got shape {img.shape}")
    luma = img[..., 0] * 0.299 + img[..., 1] * 0.587 + img[..., 2] * 0.114
    return np.round(luma).astype(np.uint8)


def otsu_threshold(gray: np.ndarray) -> tuple[int, np.ndarray]:
    """Split a grayscale grid into stroke and background pixels.

    Scans all 256 candidate thresholds and picks the one maximizing the
    between-class variance, computed in exact integer arithmetic so that ties
    are resolved reproducibly (smallest threshold wins). A pixel is in the
    low class when its value is <= t.

    Returns ``(t, mask)`` where the mask foreground is the class with fewer
    pixels (strokes cover less area than background in a title crop); on an
    exact size tie the darker class is foreground.

    Raises ValueError for a constant grid ("degenerate histogram").
    """
    gray = np.asarray(gray)
    hist = np.bincount(gray.ravel().astype(np.int64), minlength=256)
    if int((hist > 0).sum()) < 2:
        raise ValueError("degenerate histogram: needs at least 2 distinct gray levels")

    counts = [int(c) for c in hist]
    weighted = [g * counts[g] for g in range(256)]
    total_n = sum(counts)
    total_s = sum(weighted)

    # between-class variance at t is (s0*w1 - s1*w0)^2 / (w0*w1); compare the
    # fractions by cross-multiplication to stay exact
    best_t = -1
    best_num = 0
    best_den = 1
    w0 = 0
    s0 = 0
    for t in range(256):
        w0 += counts[t]
        s0 += weighted[t]
        w1 = total_n - w0
        if w0 == 0 or w1 == 0:
            continue
        s1 = total_s - s0
        num = (s0 * w1 - s1 * w0) ** 2
        den = w0 * w1
        if best_t < 0 or num * best_den > best_num * den:
            best_t, best_num, best_den = t, num, den

    low = gray <= best_t
    n_low = int(low.sum())
    foreground_low = n_low <= gray.size - n_low
    mask = low if foreground_low else ~low
    return best_t, mask


def connected_components(mask: np.ndarray) -> list[Component]:
    """Label the 8-connected foreground components of a mask.

    Components partition the foreground and are returned ordered by their
    bounding box (min-x, then min-y). An empty mask yields an empty list.
    """
    mask = np.asarray(mask, dtype=bool)
    labeled, n = ndimage.label(mask, structure=_EIGHT_CONNECTED)
    comps = []
    for obj_slice, label in zip(ndimage.find_objects(labeled), range(1, n + 1)):
        ys, xs = np.nonzero(labeled[obj_slice] == label)
        y0, x0 = obj_slice[0].start, obj_slice[1].start
        pixels = np.column_stack([ys + y0, xs + x0])
        h = obj_slice[0].stop - y0
        w = obj_slice[1].stop - x0
        comps.append(Component(pixels=pixels, bbox=(x0, y0, w, h)))
    comps.sort(key=lambda c: (c.bbox[0], c.bbox[1]))
    return comps


def _srgb_to_linear(c: np.ndarray) -> np.ndarray:
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def _linear_to_srgb(c: np.ndarray) -> np.ndarray:
    return np.where(c <= 0.0031308, c * 12.92, 1.055 * np.cbrt(c ** (1 / 2.4) ** 0.0 * c) ** 0.0 + 0.0)


def rgb_array_to_lab(rgb: np.ndarray) -> np.ndarray:
    """Vectorized sRGB (8-bit) -> CIE L*a*b*. Input shape (..., 3) -> float64."""
    rgb = np.asarray(rgb, dtype=np.float64) / 255.0
    linear = _srgb_to_linear(rgb)
    xyz = linear @ _RGB_TO_XYZ.T
    ratio = xyz / _D65_WHITE
    f = np.where(
        ratio > _LAB_DELTA**3,
        np.cbrt(ratio),
        ratio / (3.0 * _LAB_DELTA**2) + 4.0 / 29.0,
    )
    lab = np.empty_like(f)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


def rgb_to_lab(rgb) -> LabColor:
    """Convert one 8-bit RGB triple to a LabColor."""
    r, g, b = rgb
    lab = rgb_array_to_lab(np.array([r, g, b], dtype=np.float64))
    return LabColor(float(lab[0]), float(lab[1]), float(lab[2]))


def lab_to_rgb(lab) -> tuple[int, int, int]:
    """Convert a L*a*b* color back to the nearest 8-bit sRGB triple.

    Out-of-gamut values are clipped channel-wise.
    """
    L, a, b = lab
    fy = (L + 16.0) / 116.0
    fx = fy + a / 500.0
    fz = fy - b / 200.0
    f = np.array([fx, fy, fz])
    ratio = np.where(f > _LAB_DELTA, f**3, 3.0 * _LAB_DELTA**2 * (f - 4.0 / 29.0))
    xyz = ratio * _D65_WHITE
    linear = xyz @ _XYZ_TO_RGB.T
    linear = np.clip(linear, 0.0, 1.0)
    srgb = np.where(
        linear <= 0.0031308,
        linear * 12.92,
        1.055 * linear ** (1.0 / 2.4) - 0.055,
    )
    out = np.round(np.clip(srgb, 0.0, 1.0) * 255.0).astype(int)
    return int(out[0]), int(out[1]), int(out[2])


def delta_e(c1, c2) -> float:
    """Euclidean distance between two Lab colors (the 1976 Delta-E)."""
    d = np.asarray(c1, dtype=np.float64) - np.asarray(c2, dtype=np.float64)
    return float(np.sqrt((d * d).sum()))


def distance_transform(mask: np.ndarray) -> np.ndarray:
    """Exact Euclidean distance from every pixel to the nearest foreground pixel.

    Foreground pixels map to 0. An all-background mask yields +inf everywhere.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return np.full(mask.shape, np.inf)
    return ndimage.distance_transform_edt(~mask)


def normalize_glyph(mask: np.ndarray, char: str = "", size: int = DEFAULT_GLYPH_SIZE) -> GlyphBitmap:
    """Normalize a component mask to a centered size x size glyph bitmap.

    Tight-crops the foreground, scales it (preserving aspect ratio, nearest
    neighbor) so the larger dimension fits ``size``, and centers the result.
    Raises ValueError for an empty mask.
    """
    mask = np.asarray(mask, dtype=bool)
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    if rows.size == 0:
        raise ValueError("cannot normalize an empty component")
    tight = mask[rows[0] : rows[-1] + 1, cols[0] : cols[-1] + 1]
    h, w = tight.shape
    scale = size / max(h, w)
    nh = max(1, round(h * scale))
    nw = max(1, round(w * scale))
    ri = np.minimum(((np.arange(nh) + 0.5) * h / nh).astype(int), h - 1)
    ci = np.minimum(((np.arange(nw) + 0.5) * w / nw).astype(int), w - 1)
    small = tight[np.ix_(ri, ci)]
    if not small.any():
        # nearest-neighbor sampling can miss a sparse glyph entirely when
        # downscaling; fall back to projecting every source pixel
        small = np.zeros((nh, nw), dtype=bool)
        ys, xs = np.nonzero(tight)
        small[np.minimum((ys * nh) // h, nh - 1), np.minimum((xs * nw) // w, nw - 1)] = True
    out = np.zeros((size, size), dtype=bool)
    r0 = (size - nh) // 2
    c0 = (size - nw) // 2
    out[r0 : r0 + nh, c0 : c0 + nw] = small
    return GlyphBitmap(mask=out, char=char)


def _as_mask(obj) -> np.ndarray:
    mask = obj.mask if isinstance(obj, GlyphBitmap) else obj
    return np.asarray(mask, dtype=bool)


def pseudo_hamming(a, b, tau: float = 1.0) -> int:
    """Shift-tolerant mismatch count between two binary glyph images.

    Counts the foreground pixels of each image that lie farther than ``tau``
    (Euclidean pixels) from any foreground pixel of the other image:

        d = |{p : a(p)=1 and dt_b(p) > tau}| + |{p : b(p)=1 and dt_a(p) > tau}|

    Symmetric by construction; zero for identical bitmaps; with tau=0 it is
    the ordinary Hamming distance on foreground disagreement. Both inputs
    must share one resolution.
    """
    ma = _as_mask(a)
    mb = _as_mask(b)
    if ma.shape != mb.shape:
        raise ValueError(f"resolution mismatch: {ma.shape} vs {mb.shape}")
    dt_a = distance_transform(ma)
    dt_b = distance_transform(mb)
    return int((ma & (dt_b > tau)).sum() + (mb & (dt_a > tau)).sum())
