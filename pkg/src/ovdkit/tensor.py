"""Minimal dense-array layer: rank-3 feature maps, bilinear sampling, resize, crop.

Conventions (shared with the fixture exporter, see CONVENTIONS.md):
cell centers sit at integer map coordinates; resize uses half-pixel source
mapping ``(i + 0.5) * scale - 0.5``; coordinates beyond the outermost centers
clamp to the border value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DegenerateBoxError
from .geometry import Box


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """Dense (C, H, W) float32 array plus the image stride of one cell."""

    data: np.ndarray
    stride: float = 1.0

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise ValueError(f"feature map must be (C, H, W) with positive dims, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("feature map contains non-finite values")
        if not (self.stride > 0):
            raise ValueError(f"stride must be positive, got {self.stride}")
        object.__setattr__(self, "data", arr)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]


class Image(FeatureMap):
    """A stride-1 feature map with 1 or 3 channels and values in [0, 1]."""

    def __post_init__(self):
        super().__post_init__()
        if self.stride != 1.0:
            raise ValueError("images have stride 1")
        if self.channels not in (1, 3):
            raise ValueError(f"images have 1 or 3 channels, got {self.channels}")
        lo = float(self.data.min())
        hi = float(self.data.max())
        if lo < 0.0 or hi > 1.0:
            raise ValueError(f"image values must lie in [0, 1], got [{lo}, {hi}]")


def bilinear_sample(fmap: FeatureMap, x: float, y: float) -> np.ndarray:
    """Bilinear interpolation at continuous map coordinates (x, y).

    Returns a length-C float64 vector. Identical formula to the resize and
    roi-align kernels so the conventions agree everywhere.
    """
    h = fmap.height
    w = fmap.width
    yc = min(max(float(y), 0.0), float(h - 1))
    xc = min(max(float(x), 0.0), float(w - 1))
    y0 = int(math.floor(yc))
    x0 = int(math.floor(xc))
    y1 = min(y0 + 1, h - 1)
    x1 = min(x0 + 1, w - 1)
    fy = yc - y0
    fx = xc - x0
    data = fmap.data.astype(np.float64)
    top = data[:, y0, x0] * (1.0 - fx) + data[:, y0, x1] * fx
    bot = data[:, y1, x0] * (1.0 - fx) + data[:, y1, x1] * fx
    return top * (1.0 - fy) + bot * fy


def resize_bilinear(img: Image, out_h: int, out_w: int) -> Image:
    """Resample an image to out_h x out_w; aspect ratio is deliberately not kept."""
    if out_h < 1 or out_w < 1:
        raise ValueError(f"output size must be positive, got {out_h}x{out_w}")
    out = _kernels.resize_bilinear(img.data.astype(np.float64), out_h, out_w)
    return Image(out.astype(np.float32))


def _center_range(lo: float, hi: float, n: int) -> tuple[int, int]:
    """Indices i with lo <= i + 0.5 < hi, clamped into [0, n)."""
    start = max(int(math.ceil(lo - 0.5)), 0)
    stop = min(int(math.ceil(hi - 0.5)), n)
    return start, stop


def crop(img: Image, b: Box) -> Image:
    """Integer crop of the rows/columns whose pixel centers fall inside ``b``.

    Raises DegenerateBoxError when no pixel center is covered.
    """
    xs, xe = _center_range(b.x1, b.x2, img.width)
    ys, ye = _center_range(b.y1, b.y2, img.height)
    if xe <= xs or ye <= ys:
        raise DegenerateBoxError(f"crop {b} covers no pixel centers of a {img.width}x{img.height} image")
    return Image(img.data[:, ys:ye, xs:xe].copy())
