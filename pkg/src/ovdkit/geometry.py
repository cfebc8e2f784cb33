"""Box algebra on continuous pixel coordinates.

Boxes are corner-format (x1, y1, x2, y2) throughout the package; the xywh
form used by result files appears only at file boundaries via the conversion
helpers.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .errors import DegenerateBoxError


class DegenerateBoxWarning(UserWarning):
    """Emitted when an operation is defined by convention on zero-area input."""


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle in image pixel coordinates, corner format."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        for v in (self.x1, self.y1, self.x2, self.y2):
            if not math.isfinite(v):
                raise ValueError(f"box coordinates must be finite, got {self!r}")
        if self.x2 < self.x1 or self.y2 < self.y1:
            raise ValueError(f"box corners out of order: {self!r}")

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)

    def key(self) -> tuple[float, float, float, float]:
        """Lexicographic tie-break key used by NMS and ranking."""
        return (self.x1, self.y1, self.x2, self.y2)


@dataclass(frozen=True)
class ImageExtent:
    """Image size in whole pixels."""

    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"extent must be at least 1x1, got {self!r}")


def iou(a: Box, b: Box) -> float:
    """Intersection over union of two boxes, in [0, 1].

    When both boxes have zero area the union is empty and the result is 0 by
    convention; a DegenerateBoxWarning flags the case so callers can notice.
    """
    ix = min(a.x2, b.x2) - max(a.x1, b.x1)
    iy = min(a.y2, b.y2) - max(a.y1, b.y1)
    inter = max(ix, 0.0) * max(iy, 0.0)
    union = a.area + b.area - inter
    if union <= 0.0:
        warnings.warn("IoU of two zero-area boxes is 0 by convention", DegenerateBoxWarning, stacklevel=2)
        return 0.0
    return inter / union


def clip_box(b: Box, bounds: ImageExtent) -> Box:
    """Clamp a box into [0, width] x [0, height]."""
    w = float(bounds.width)
    h = float(bounds.height)
    return Box(
        min(max(b.x1, 0.0), w),
        min(max(b.y1, 0.0), h),
        min(max(b.x2, 0.0), w),
        min(max(b.y2, 0.0), h),
    )


def expand_box(b: Box, factor: float, bounds: ImageExtent) -> Box:
    """Scale a box about its center by ``factor``, then clip to ``bounds``.

    factor 1.0 is the exact identity (modulo clipping). Raises
    DegenerateBoxError when clipping collapses the result to zero width or
    height, so callers can fall back to the unexpanded crop.
    """
    if not (factor > 0.0):
        raise ValueError(f"expand factor must be positive, got {factor}")
    if factor == 1.0:
        out = clip_box(b, bounds)
    else:
        cx, cy = b.center
        hw = b.width * factor / 2.0
        hh = b.height * factor / 2.0
        out = clip_box(Box(cx - hw, cy - hh, cx + hw, cy + hh), bounds)
    if out.width == 0.0 or out.height == 0.0:
        raise DegenerateBoxError(f"expansion of {b} by {factor} clipped to zero area in {bounds}")
    return out


def box_to_xywh(b: Box) -> tuple[float, float, float, float]:
    """Corner box -> (x, y, width, height)."""
    return (b.x1, b.y1, b.x2 - b.x1, b.y2 - b.y1)


def box_from_xywh(x: float, y: float, w: float, h: float) -> Box:
    """(x, y, width, height) -> corner box. Negative sizes are rejected."""
    if w < 0 or h < 0:
        raise ValueError(f"xywh box has negative size: w={w}, h={h}")
    return Box(x, y, x + w, y + h)
