"""Pure-numpy kernel backend.

Mirrors the numba backend loop for loop: every reduction accumulates in the
same element order, so both backends round identically. Keep the two files in
sync when touching either.
"""

from __future__ import annotations

import numpy as np


def conv3x3(padded: np.ndarray, weights: np.ndarray, bias: np.ndarray, stride: int) -> np.ndarray:
    """3x3 convolution over a zero-padded (Cin, H+2, W+2) float64 map.

    Output pixel (oy, ox) reads the window starting at (oy*stride, ox*stride)
    in the padded input. Accumulation order per output element: bias first,
    then (cin, ky, kx); output channels are data-parallel, so vectorizing over
    them leaves every element's accumulation sequence intact.
    """
    cin = weights.shape[1]
    h = padded.shape[1] - 2
    w = padded.shape[2] - 2
    oh = (h - 1) // stride + 1
    ow = (w - 1) // stride + 1
    ys = (oh - 1) * stride + 1
    xs = (ow - 1) * stride + 1
    acc = np.repeat(bias[:, None], oh * ow, axis=1).reshape(weights.shape[0], oh, ow)
    for ic in range(cin):
        for ky in range(3):
            for kx in range(3):
                patch = padded[ic, ky:ky + ys:stride, kx:kx + xs:stride]
                acc += weights[:, ic, ky, kx, None, None] * patch[None, :, :]
    return acc


def _gather_bilinear(fmap: np.ndarray, yy: np.ndarray, xx: np.ndarray) -> np.ndarray:
    """Sample fmap (C, H, W) at the grid yy x xx with border clamp.

    Returns (C, len(yy), len(xx)).
    """
    h = fmap.shape[1]
    w = fmap.shape[2]
    yc = np.minimum(np.maximum(yy, 0.0), float(h - 1))
    xc = np.minimum(np.maximum(xx, 0.0), float(w - 1))
    y0 = np.floor(yc).astype(np.int64)
    x0 = np.floor(xc).astype(np.int64)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (yc - y0)[None, :, None]
    fx = (xc - x0)[None, None, :]
    v00 = fmap[:, y0[:, None], x0[None, :]]
    v01 = fmap[:, y0[:, None], x1[None, :]]
    v10 = fmap[:, y1[:, None], x0[None, :]]
    v11 = fmap[:, y1[:, None], x1[None, :]]
    top = v00 * (1.0 - fx) + v01 * fx
    bot = v10 * (1.0 - fx) + v11 * fx
    return top * (1.0 - fy) + bot * fy


def resize_bilinear(src: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Half-pixel-aligned bilinear resample of a (C, H, W) float64 map."""
    h = src.shape[1]
    w = src.shape[2]
    sy = h / out_h
    sx = w / out_w
    yy = (np.arange(out_h, dtype=np.float64) + 0.5) * sy - 0.5
    xx = (np.arange(out_w, dtype=np.float64) + 0.5) * sx - 0.5
    return _gather_bilinear(src, yy, xx)


def roi_align_grid(
    fmap: np.ndarray,
    x1: float,
    y1: float,
    x2: float,
    y2: float,
    pool: int,
    samples: int,
) -> np.ndarray:
    """Average-pool a continuous roi (map coordinates) into a (C, pool, pool) grid.

    Each bin averages samples*samples bilinear taps placed at fractional
    offsets (s + 0.5) / samples inside the bin; taps accumulate in (sy, sx)
    order.
    """
    c = fmap.shape[0]
    bw = (x2 - x1) / pool
    bh = (y2 - y1) / pool
    grid = np.arange(pool, dtype=np.float64)
    out = np.zeros((c, pool, pool), dtype=np.float64)
    for sy in range(samples):
        oy = (sy + 0.5) / samples
        for sx in range(samples):
            ox = (sx + 0.5) / samples
            yy = y1 + bh * (grid + oy)
            xx = x1 + bw * (grid + ox)
            out += _gather_bilinear(fmap, yy, xx)
    return out / (samples * samples)
