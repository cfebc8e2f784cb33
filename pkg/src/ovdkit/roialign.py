"""RoIAlign: average-pool a feature map over a continuous box into a P x P grid."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DegenerateBoxError
from .geometry import Box
from .tensor import FeatureMap


@dataclass(frozen=True)
class RoiAlignConfig:
    """Pooling grid size, bilinear taps per bin edge, and coordinate alignment.

    ``aligned`` applies the half-pixel offset when converting image to map
    coordinates, matching the stride-aware convention of the sampling layer.
    """

    output_size: int = 7
    sampling_ratio: int = 2
    aligned: bool = True

    def __post_init__(self):
        if self.output_size < 1:
            raise ValueError(f"output_size must be >= 1, got {self.output_size}")
        if self.sampling_ratio < 1:
            raise ValueError(f"sampling_ratio must be >= 1, got {self.sampling_ratio}")


def roi_align(features: FeatureMap, roi: Box, cfg: RoiAlignConfig = RoiAlignConfig()) -> np.ndarray:
    """Pool ``features`` over ``roi`` (image coordinates) into (C, P, P) float32.

    The roi is divided by the map stride (minus 0.5 when aligned), split into
    P x P bins, and each bin averages sampling_ratio**2 bilinear taps at
    regular sub-bin offsets. Zero-area rois raise DegenerateBoxError so the
    caller can drop the proposal.
    """
    if roi.area == 0.0:
        raise DegenerateBoxError(f"roi {roi} has zero area")
    off = 0.5 if cfg.aligned else 0.0
    x1 = roi.x1 / features.stride - off
    y1 = roi.y1 / features.stride - off
    x2 = roi.x2 / features.stride - off
    y2 = roi.y2 / features.stride - off
    out = _kernels.roi_align_grid(
        features.data.astype(np.float64),
        x1, y1, x2, y2,
        cfg.output_size,
        cfg.sampling_ratio,
    )
    return out.astype(np.float32)
