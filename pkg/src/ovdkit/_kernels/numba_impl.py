"""Numba kernel backend: the loops of numpy_impl, JIT-compiled.

Identical accumulation order to numpy_impl; no fastmath, so results stay
bit-identical across backends.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def conv3x3(padded, weights, bias, stride):
    cout, cin = weights.shape[0], weights.shape[1]
    h = padded.shape[1] - 2
    w = padded.shape[2] - 2
    oh = (h - 1) // stride + 1
    ow = (w - 1) // stride + 1
    out = np.empty((cout, oh, ow), dtype=np.float64)
    for oc in range(cout):
        for oy in range(oh):
            for ox in range(ow):
                acc = bias[oc]
                for ic in range(cin):
                    for ky in range(3):
                        for kx in range(3):
                            acc += weights[oc, ic, ky, kx] * padded[ic, oy * stride + ky, ox * stride + kx]
                out[oc, oy, ox] = acc
    return out


@njit(cache=True, inline="always")
def _sample_bilinear(fmap, c, y, x):
    h = fmap.shape[1]
    w = fmap.shape[2]
    yc = min(max(y, 0.0), float(h - 1))
    xc = min(max(x, 0.0), float(w - 1))
    y0 = int(np.floor(yc))
    x0 = int(np.floor(xc))
    y1 = min(y0 + 1, h - 1)
    x1 = min(x0 + 1, w - 1)
    fy = yc - y0
    fx = xc - x0
    top = fmap[c, y0, x0] * (1.0 - fx) + fmap[c, y0, x1] * fx
    bot = fmap[c, y1, x0] * (1.0 - fx) + fmap[c, y1, x1] * fx
    return top * (1.0 - fy) + bot * fy


@njit(cache=True)
def resize_bilinear(src, out_h, out_w):
    c = src.shape[0]
    h = src.shape[1]
    w = src.shape[2]
    sy = h / out_h
    sx = w / out_w
    out = np.empty((c, out_h, out_w), dtype=np.float64)
    for ch in range(c):
        for oy in range(out_h):
            y = (oy + 0.5) * sy - 0.5
            for ox in range(out_w):
                x = (ox + 0.5) * sx - 0.5
                out[ch, oy, ox] = _sample_bilinear(src, ch, y, x)
    return out


@njit(cache=True)
def roi_align_grid(fmap, x1, y1, x2, y2, pool, samples):
    c = fmap.shape[0]
    bw = (x2 - x1) / pool
    bh = (y2 - y1) / pool
    out = np.empty((c, pool, pool), dtype=np.float64)
    for ch in range(c):
        for py in range(pool):
            for px in range(pool):
                acc = 0.0
                for sy in range(samples):
                    oy = (sy + 0.5) / samples
                    y = y1 + bh * (py + oy)
                    for sx in range(samples):
                        ox = (sx + 0.5) / samples
                        x = x1 + bw * (px + ox)
                        acc += _sample_bilinear(fmap, ch, y, x)
                out[ch, py, px] = acc / (samples * samples)
    return out
