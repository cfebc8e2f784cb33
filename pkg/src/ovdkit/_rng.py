"""Counter-based 64-bit mixing PRNG.

All synthetic weights and fixtures derive from this generator so that a seed
fully determines every byte of a bundle, independent of platform and of the
order in which arrays are requested.

Scheme (all arithmetic mod 2**64):

    state(seed, tag, i) = seed + tag * 0xD1B54A32D192ED03 + (i + 1) * 0x9E3779B97F4A7C15
    value = mix(state)          # the finalizer below
    unit  = (value >> 11) * 2**-53   # float64 in [0, 1)

where ``mix`` is the xor-shift/multiply finalizer

    z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
    z ^= z >> 27;  z *= 0x94D049BB133111EB
    z ^= z >> 31

``tag`` separates independent streams (one per array); ``i`` indexes elements
within a stream.
"""

from __future__ import annotations

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_TAG_GAMMA = np.uint64(0xD1B54A32D192ED03)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def unit_floats(seed: int, tag: int, n: int) -> np.ndarray:
    """n float64 values in [0, 1) from stream (seed, tag)."""
    idx = np.arange(1, n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):  # mod-2**64 wraparound is the point
        state = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + np.uint64(tag) * _TAG_GAMMA + idx * _GAMMA
        mixed = _mix(state)
    return (mixed >> np.uint64(11)).astype(np.float64) * 2.0**-53


def uniform(seed: int, tag: int, n: int, low: float, high: float) -> np.ndarray:
    """n float64 values uniform in [low, high) from stream (seed, tag)."""
    return low + unit_floats(seed, tag, n) * (high - low)
