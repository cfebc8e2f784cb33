"""Staged visual backbones.

A backbone is a chain of strided 3x3 convolution stages with a softsign
nonlinearity, split at index k: stages [0, k) encode whole images into a
feature map, stages [k, end) plus a projection head (global average pool,
linear map, L2 normalization) turn pooled region features into embeddings.
Crops run the full chain.

The synthetic stub generates every weight from the counter-based PRNG in
``ovdkit._rng``, so a seed determines outputs bit-exactly; softsign
``x / (1 + |x|)`` is built from correctly-rounded primitives, keeping the
numba and numpy kernel backends identical.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .. import _kernels, _rng
from ..errors import ConfigError
from ..tensor import FeatureMap, Image


@dataclass(frozen=True)
class StageSpec:
    """One convolution stage: 3x3 kernel, zero padding 1, the given stride."""

    in_channels: int
    out_channels: int
    stride: int = 2

    def __post_init__(self):
        if self.in_channels < 1 or self.out_channels < 1 or self.stride < 1:
            raise ValueError(f"invalid stage spec {self}")


DEFAULT_STAGES = (
    StageSpec(3, 8),
    StageSpec(8, 16),
    StageSpec(16, 32),
    StageSpec(32, 64),
)


@dataclass(frozen=True)
class StubSpec:
    """Architecture of a synthetic backbone."""

    stages: tuple[StageSpec, ...] = DEFAULT_STAGES
    split: int = 3
    embed_dim: int = 64
    input_size: int = 64

    def __post_init__(self):
        if len(self.stages) == 0:
            raise ConfigError("backbone spec has no stages")
        if not (1 <= self.split < len(self.stages)):
            raise ConfigError(f"split index {self.split} must satisfy 1 <= split < {len(self.stages)}")
        for a, b in zip(self.stages, self.stages[1:]):
            if a.out_channels != b.in_channels:
                raise ConfigError(f"stage channel mismatch: {a.out_channels} -> {b.in_channels}")
        if self.embed_dim < 1 or self.input_size < 1:
            raise ConfigError(f"invalid embed_dim/input_size in {self}")

    def to_dict(self) -> dict:
        return {
            "stages": [[s.in_channels, s.out_channels, s.stride] for s in self.stages],
            "split": self.split,
            "embed_dim": self.embed_dim,
            "input_size": self.input_size,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StubSpec":
        return cls(
            stages=tuple(StageSpec(*s) for s in d["stages"]),
            split=int(d["split"]),
            embed_dim=int(d["embed_dim"]),
            input_size=int(d["input_size"]),
        )


def _softsign(x: np.ndarray) -> np.ndarray:
    return x / (1.0 + np.abs(x))


class StagedBackbone:
    """Deterministic staged encoder over explicit float64 weights."""

    def __init__(self, spec: StubSpec, stage_weights: list[tuple[np.ndarray, np.ndarray]], projection: np.ndarray):
        if len(stage_weights) != len(spec.stages):
            raise ConfigError(f"got {len(stage_weights)} weight pairs for {len(spec.stages)} stages")
        for s, (w, b) in zip(spec.stages, stage_weights):
            if w.shape != (s.out_channels, s.in_channels, 3, 3) or b.shape != (s.out_channels,):
                raise ConfigError(f"stage weights {w.shape}/{b.shape} do not match spec {s}")
        last = spec.stages[-1].out_channels
        if projection.shape != (spec.embed_dim, last):
            raise ConfigError(f"projection shape {projection.shape} does not match ({spec.embed_dim}, {last})")
        self.spec = spec
        self._stages = [(np.ascontiguousarray(w, dtype=np.float64), np.ascontiguousarray(b, dtype=np.float64))
                        for w, b in stage_weights]
        self._proj = np.ascontiguousarray(projection, dtype=np.float64)
        # replay cache installed by the fixture loader: image id -> FeatureMap
        self._full_cache: dict[int, FeatureMap] = {}

    # -- structure ---------------------------------------------------------

    @property
    def embed_dim(self) -> int:
        return self.spec.embed_dim

    @property
    def input_size(self) -> int:
        return self.spec.input_size

    @property
    def feature_channels(self) -> int:
        """Channels of the whole-image feature map (output of stage split-1)."""
        return self.spec.stages[self.spec.split - 1].out_channels

    @property
    def full_stride(self) -> float:
        s = 1
        for st in self.spec.stages[: self.spec.split]:
            s *= st.stride
        return float(s)

    @property
    def param_count(self) -> int:
        return sum(w.size + b.size for w, b in self._stages) + self._proj.size

    def weight_arrays(self) -> list[np.ndarray]:
        """All weight arrays in definition order (stages then projection)."""
        out: list[np.ndarray] = []
        for w, b in self._stages:
            out.append(w)
            out.append(b)
        out.append(self._proj)
        return out

    def weights_sha256(self) -> str:
        h = hashlib.sha256()
        for arr in self.weight_arrays():
            h.update(arr.tobytes(order="C"))
        return h.hexdigest()

    # -- forward passes ----------------------------------------------------

    def encode_full(self, img: Image, image_id: int | None = None) -> FeatureMap:
        """Whole-image encoding through stages [0, split)."""
        if image_id is not None and image_id in self._full_cache:
            return self._full_cache[image_id]
        data = self._forward(img.data.astype(np.float64), 0, self.spec.split)
        return FeatureMap(data.astype(np.float32), stride=self.full_stride)

    def encode_head(self, pooled: np.ndarray) -> np.ndarray:
        """Region embedding from a pooled (C, P, P) grid through the tail stages."""
        pooled = np.ascontiguousarray(pooled, dtype=np.float64)
        expect = self.spec.stages[self.spec.split].in_channels
        if pooled.ndim != 3 or pooled.shape[0] != expect:
            raise ValueError(f"pooled input must be ({expect}, P, P), got {pooled.shape}")
        data = self._forward(pooled, self.spec.split, len(self.spec.stages))
        return self._project(data)

    def encode_crop(self, img: Image) -> np.ndarray:
        """Full-chain embedding of a crop resized to the declared input size."""
        if img.height != self.spec.input_size or img.width != self.spec.input_size:
            raise ValueError(
                f"crop must be {self.spec.input_size}x{self.spec.input_size}, got {img.height}x{img.width}"
            )
        data = self._forward(img.data.astype(np.float64), 0, len(self.spec.stages))
        return self._project(data)

    def _forward(self, data: np.ndarray, start: int, stop: int) -> np.ndarray:
        for i in range(start, stop):
            w, b = self._stages[i]
            if data.shape[0] != w.shape[1]:
                raise ConfigError(f"stage {i} expects {w.shape[1]} channels, got {data.shape[0]}")
            padded = np.pad(data, ((0, 0), (1, 1), (1, 1)))
            data = _softsign(_kernels.conv3x3(padded, w, b, self.spec.stages[i].stride))
        return data

    def _project(self, data: np.ndarray) -> np.ndarray:
        gap = data.mean(axis=(1, 2))
        vec = self._proj @ gap
        n = np.linalg.norm(vec)
        if n == 0.0:
            raise ValueError("projection produced a zero vector; cannot normalize")
        return vec / n


def make_stub(seed: int, spec: StubSpec = StubSpec()) -> StagedBackbone:
    """Generate a synthetic backbone whose weights derive entirely from ``seed``.

    Stream tags are 2*i and 2*i+1 for stage i's kernel and bias, then one tag
    for the projection; weights are uniform in +-sqrt(3/fan_in).
    """
    weights: list[tuple[np.ndarray, np.ndarray]] = []
    tag = 0
    for st in spec.stages:
        fan_in = st.in_channels * 9
        s = math.sqrt(3.0 / fan_in)
        w = _rng.uniform(seed, tag, st.out_channels * st.in_channels * 9, -s, s)
        b = _rng.uniform(seed, tag + 1, st.out_channels, -s, s)
        weights.append((w.reshape(st.out_channels, st.in_channels, 3, 3), b))
        tag += 2
    c_last = spec.stages[-1].out_channels
    s = math.sqrt(3.0 / c_last)
    proj = _rng.uniform(seed, tag, spec.embed_dim * c_last, -s, s).reshape(spec.embed_dim, c_last)
    return StagedBackbone(spec, weights, proj)
