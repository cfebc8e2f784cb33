"""Score fusion, per-class greedy NMS, and final detection assembly."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Box


@dataclass(frozen=True)
class Detection:
    """One scored box: the pipeline output and the evaluation input."""

    image_id: int
    class_id: int
    box: Box
    score: float

    def __post_init__(self):
        if not math.isfinite(self.score) or not (0.0 <= self.score <= 1.0):
            raise ValueError(f"detection score must be finite in [0, 1], got {self.score}")


@dataclass(frozen=True)
class NmsConfig:
    iou_threshold: float = 0.5
    score_threshold: float = 0.0
    max_detections: int = 100

    def __post_init__(self):
        if not (0.0 <= self.iou_threshold <= 1.0):
            raise ValueError(f"iou_threshold must be in [0, 1], got {self.iou_threshold}")
        if not (0.0 <= self.score_threshold <= 1.0):
            raise ValueError(f"score_threshold must be in [0, 1], got {self.score_threshold}")
        if self.max_detections < 1:
            raise ValueError(f"max_detections must be >= 1, got {self.max_detections}")


def sigmoid(x: float) -> float:
    """Logistic squash of an objectness logit into (0, 1)."""
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def fuse_scores(s1: float, s2: np.ndarray) -> np.ndarray:
    """Geometric-mean fusion sqrt(s1 * s2_c) of an objectness score with class scores.

    Both inputs must already live in [0, 1]. The fused score of every class
    lies between min(s1, s2_c) and max(s1, s2_c), and the per-box argmax over
    classes is unchanged.
    """
    if not (0.0 <= s1 <= 1.0):
        raise ValueError(f"objectness score must be in [0, 1], got {s1}")
    s2 = np.asarray(s2, dtype=np.float64)
    if s2.size and (s2.min() < 0.0 or s2.max() > 1.0):
        raise ValueError("class scores must be in [0, 1]")
    return np.sqrt(s1 * s2)


def _det_key(d: Detection) -> tuple:
    return (-d.score,) + d.box.key()


def _greedy_keep(boxes: np.ndarray, thresh: float) -> list[int]:
    """Greedy suppression over score-sorted (N, 4) boxes; returns kept indices."""
    n = boxes.shape[0]
    areas = (boxes[:, 2] - boxes[:, 0]) * (boxes[:, 3] - boxes[:, 1])
    kept: list[int] = []
    for i in range(n):
        if kept:
            kb = boxes[kept]
            ix = np.minimum(kb[:, 2], boxes[i, 2]) - np.maximum(kb[:, 0], boxes[i, 0])
            iy = np.minimum(kb[:, 3], boxes[i, 3]) - np.maximum(kb[:, 1], boxes[i, 1])
            inter = np.maximum(ix, 0.0) * np.maximum(iy, 0.0)
            union = areas[kept] + areas[i] - inter
            iou = np.where(union > 0.0, inter / np.maximum(union, 1e-300), 0.0)
            if np.any(iou > thresh):
                continue
        kept.append(i)
    return kept


def per_class_nms(dets: list[Detection], cfg: NmsConfig = NmsConfig()) -> list[Detection]:
    """Greedy NMS independently per class id, then score filter and truncation.

    Within each class, detections sort by score descending (ties broken by
    box coordinates lexicographically); a box survives iff its IoU with every
    previously kept box of the same class is <= the threshold. Survivors below
    the score threshold are dropped and the remainder is truncated to
    ``max_detections`` by score across classes. Detections pass through
    unmodified.
    """
    by_class: dict[int, list[Detection]] = {}
    for d in dets:
        by_class.setdefault(d.class_id, []).append(d)
    survivors: list[Detection] = []
    for cid in sorted(by_class):
        ordered = sorted(by_class[cid], key=_det_key)
        boxes = np.array([[d.box.x1, d.box.y1, d.box.x2, d.box.y2] for d in ordered], dtype=np.float64)
        for i in _greedy_keep(boxes, cfg.iou_threshold):
            survivors.append(ordered[i])
    survivors = [d for d in survivors if d.score >= cfg.score_threshold]
    survivors.sort(key=lambda d: (-d.score, d.class_id) + d.box.key())
    return survivors[: cfg.max_detections]
