"""Region proposal providers: ranked class-agnostic boxes with objectness logits."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

from .. import _rng
from ..geometry import Box, ImageExtent, clip_box


@dataclass(frozen=True)
class Proposal:
    """A candidate box with its raw objectness logit."""

    box: Box
    objectness: float

    def __post_init__(self):
        if not math.isfinite(self.objectness):
            raise ValueError(f"objectness must be finite, got {self.objectness}")


def _rank_key(p: Proposal) -> tuple:
    return (-p.objectness,) + p.box.key()


class ProposalProvider:
    """Per-image proposal lists, clipped to their extents and rank-sorted.

    Ranking is objectness descending with lexicographic box coordinates as a
    deterministic tie-break, so top-k requests are prefix-closed.
    """

    def __init__(
        self,
        per_image: Mapping[int, Iterable[Proposal]],
        extents: Mapping[int, ImageExtent],
        source: str = "synthetic",
    ):
        self.source = source
        self._ranked: dict[int, tuple[Proposal, ...]] = {}
        for image_id, props in per_image.items():
            extent = extents[image_id]
            clipped = [Proposal(clip_box(p.box, extent), p.objectness) for p in props]
            self._ranked[image_id] = tuple(sorted(clipped, key=_rank_key))

    @property
    def image_ids(self) -> tuple[int, ...]:
        return tuple(sorted(self._ranked))

    def top_k(self, image_id: int, k: int = 100) -> list[Proposal]:
        """The k highest-objectness proposals for an image (fewer if fewer exist)."""
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        if image_id not in self._ranked:
            raise KeyError(f"unknown image id {image_id}")
        return list(self._ranked[image_id][:k])


def synthetic_proposals(
    seed: int,
    extents: Mapping[int, ImageExtent],
    per_image: int,
    min_size: float = 4.0,
    tag_base: int = 2000,
) -> ProposalProvider:
    """Deterministic random proposals: boxes at least ``min_size`` wide/tall inside each extent."""
    out: dict[int, list[Proposal]] = {}
    for image_id in sorted(extents):
        extent = extents[image_id]
        w, h = float(extent.width), float(extent.height)
        u = _rng.unit_floats(seed, tag_base + image_id, per_image * 5)
        props = []
        for i in range(per_image):
            u1, u2, u3, u4, u5 = u[5 * i : 5 * i + 5]
            x1 = u1 * (w - min_size)
            y1 = u2 * (h - min_size)
            x2 = x1 + min_size + u3 * (w - x1 - min_size)
            y2 = y1 + min_size + u4 * (h - y1 - min_size)
            props.append(Proposal(Box(x1, y1, x2, y2), objectness=-3.0 + 6.0 * u5))
        out[image_id] = props
    return ProposalProvider(out, extents, source="synthetic")
