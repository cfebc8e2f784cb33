"""Dataset ingestion, base/novel splits, greedy IoU matching, and AP50 reports.

AP uses the 101-point interpolated rule: the precision envelope sampled at
recalls 0, 0.01, ..., 1.00. Classes without ground truth are excluded from
group means so empty groups cannot poison a report.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SchemaError, SplitError
from .geometry import Box, ImageExtent, box_from_xywh
from .postprocess import Detection

_RECALL_POINTS = np.arange(101) / 100.0


@dataclass(frozen=True)
class Annotation:
    image_id: int
    class_id: int
    box: Box


@dataclass(frozen=True, eq=False)
class GroundTruthSet:
    images: dict[int, ImageExtent]
    annotations: tuple[Annotation, ...]
    categories: dict[int, str]

    def gt_count(self, class_id: int) -> int:
        return sum(1 for a in self.annotations if a.class_id == class_id)


@dataclass(frozen=True, eq=False)
class CategorySplit:
    base: frozenset[int]
    novel: frozenset[int]
    groups: dict[str, frozenset[int]] | None = None

    @property
    def all_ids(self) -> frozenset[int]:
        return self.base | self.novel


@dataclass(frozen=True, eq=False)
class MetricsReport:
    """Grouped AP50 values in [0, 1]; the file/table interface reports x100."""

    protocol: str
    iou_threshold: float
    per_class: dict[int, float]
    novel: float | None
    base: float | None
    overall: float | None
    groups: dict[str, float | None] | None = None
    group_mean: float | None = None

    @staticmethod
    def _pct(v: float | None) -> float | None:
        return None if v is None else 100.0 * v

    def to_dict(self) -> dict:
        doc = {
            "protocol": self.protocol,
            "iou_threshold": self.iou_threshold,
            "ap50": {
                "novel": self._pct(self.novel),
                "base": self._pct(self.base),
                "overall": self._pct(self.overall),
            },
            "per_class": {str(cid): self._pct(ap) for cid, ap in sorted(self.per_class.items())},
        }
        if self.groups is not None:
            doc["lvis"] = {name: self._pct(v) for name, v in self.groups.items()}
            doc["lvis"]["mean_of_groups"] = self._pct(self.group_mean)
            doc["lvis"]["mean_all_classes"] = self._pct(self.overall)
        return doc

    def to_table(self) -> str:
        def fmt(v: float | None) -> str:
            return "-" if v is None else f"{100.0 * v:.1f}"

        rows = [("Novel", self.novel), ("Base", self.base), ("Overall", self.overall)]
        if self.groups is not None:
            rows += [(name.capitalize(), v) for name, v in self.groups.items()]
            rows.append(("GroupMean", self.group_mean))
        width = max(len(r[0]) for r in rows) + 2
        lines = [f"{'group':<{width}}AP50"]
        lines += [f"{name:<{width}}{fmt(v)}" for name, v in rows]
        return "\n".join(lines)


# -- loading ----------------------------------------------------------------


def build_dataset(ann: dict, split: dict) -> tuple[GroundTruthSet, CategorySplit]:
    """Cross-reference and validate parsed annotation and split documents."""
    try:
        images = {int(e["id"]): ImageExtent(int(e["width"]), int(e["height"])) for e in ann["images"]}
        categories = {int(c["id"]): str(c["name"]) for c in ann["categories"]}
        raw_annotations = ann["annotations"]
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed annotation document: {exc}") from exc
    if len(images) != len(ann["images"]):
        raise SchemaError("duplicate image ids in annotation document")
    if len(categories) != len(ann["categories"]):
        raise SchemaError("duplicate category ids in annotation document")

    annotations = []
    for a in raw_annotations:
        if a.get("iscrowd"):
            raise SchemaError(f"crowd annotations are not supported (annotation {a.get('id')})")
        image_id = int(a["image_id"])
        class_id = int(a["category_id"])
        if image_id not in images:
            raise SchemaError(f"annotation {a.get('id')} references unknown image {image_id}")
        if class_id not in categories:
            raise SchemaError(f"annotation {a.get('id')} references unknown category {class_id}")
        try:
            box = box_from_xywh(*(float(v) for v in a["bbox"]))
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"annotation {a.get('id')} has an invalid bbox: {exc}") from exc
        extent = images[image_id]
        if box.x1 < 0 or box.y1 < 0 or box.x2 > extent.width or box.y2 > extent.height:
            raise SchemaError(f"annotation {a.get('id')} box {box} exceeds image extent {extent}")
        annotations.append(Annotation(image_id, class_id, box))

    base = frozenset(int(c) for c in split.get("base", []))
    novel = frozenset(int(c) for c in split.get("novel", []))
    if base & novel:
        raise SplitError(f"base and novel sets overlap: {sorted(base & novel)}")
    unknown = (base | novel) - set(categories)
    if unknown:
        raise SplitError(f"split lists categories absent from the table: {sorted(unknown)}")
    groups = None
    if "groups" in split and split["groups"] is not None:
        groups = {str(name): frozenset(int(c) for c in ids) for name, ids in split["groups"].items()}
        for name, ids in groups.items():
            missing = ids - set(categories)
            if missing:
                raise SplitError(f"group '{name}' lists categories absent from the table: {sorted(missing)}")
    return (
        GroundTruthSet(images=images, annotations=tuple(annotations), categories=categories),
        CategorySplit(base=base, novel=novel, groups=groups),
    )


def load_dataset(annotations_path: str | Path, split_path: str | Path) -> tuple[GroundTruthSet, CategorySplit]:
    """Load COCO-subset annotations and a base/novel split file."""
    try:
        ann = json.loads(Path(annotations_path).read_text())
        split = json.loads(Path(split_path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    return build_dataset(ann, split)


def load_detections(path: str | Path) -> list[Detection]:
    """Read a COCO-style results file (xywh boxes)."""
    try:
        rows = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid detections JSON: {exc}") from exc
    if not isinstance(rows, list):
        raise SchemaError("detections file must be a JSON array")
    out = []
    for r in rows:
        try:
            out.append(
                Detection(
                    image_id=int(r["image_id"]),
                    class_id=int(r["category_id"]),
                    box=box_from_xywh(*(float(v) for v in r["bbox"])),
                    score=float(r["score"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"invalid detection row {r}: {exc}") from exc
    return out


# -- matching and AP ---------------------------------------------------------


def match_detections(dets: list[Detection], gts: list[Box], iou_threshold: float = 0.5) -> np.ndarray:
    """TP/FP flags for one (image, class) pair; ``dets`` must be score-sorted.

    Each detection greedily claims the unmatched ground-truth box of highest
    IoU, provided that IoU reaches the threshold (ties resolve to the lowest
    GT index); every GT matches at most once.
    """
    flags = np.zeros(len(dets), dtype=bool)
    if not gts:
        return flags
    g = np.array([[b.x1, b.y1, b.x2, b.y2] for b in gts], dtype=np.float64)
    areas = (g[:, 2] - g[:, 0]) * (g[:, 3] - g[:, 1])
    taken = np.zeros(len(gts), dtype=bool)
    for i, d in enumerate(dets):
        b = d.box
        ix = np.minimum(g[:, 2], b.x2) - np.maximum(g[:, 0], b.x1)
        iy = np.minimum(g[:, 3], b.y2) - np.maximum(g[:, 1], b.y1)
        inter = np.maximum(ix, 0.0) * np.maximum(iy, 0.0)
        union = areas + b.area - inter
        iou = np.where(union > 0.0, inter / np.maximum(union, 1e-300), 0.0)
        iou[taken] = -1.0
        j = int(np.argmax(iou))
        if iou[j] >= iou_threshold:
            taken[j] = True
            flags[i] = True
    return flags


def average_precision(flags, n_gt: int) -> float:
    """101-point interpolated AP from rank-ordered TP/FP flags."""
    if n_gt <= 0:
        return 0.0
    flags = np.asarray(flags, dtype=bool)
    if flags.size == 0:
        return 0.0
    tp = np.cumsum(flags)
    fp = np.cumsum(~flags)
    recall = tp / n_gt
    precision = tp / (tp + fp)
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    idx = np.searchsorted(recall, _RECALL_POINTS, side="left")
    sampled = np.where(idx < flags.size, envelope[np.minimum(idx, flags.size - 1)], 0.0)
    return float(sampled.mean())


def _det_rank_key(d: Detection) -> tuple:
    return (-d.score,) + d.box.key()


def _pool_rank_key(d: Detection) -> tuple:
    return (-d.score, d.image_id) + d.box.key()


def _class_ap(dets: list[Detection], gt: GroundTruthSet, class_id: int, iou_threshold: float) -> float:
    gt_by_image: dict[int, list[Box]] = {}
    for a in gt.annotations:
        if a.class_id == class_id:
            gt_by_image.setdefault(a.image_id, []).append(a.box)
    n_gt = sum(len(v) for v in gt_by_image.values())

    by_image: dict[int, list[Detection]] = {}
    for d in dets:
        by_image.setdefault(d.image_id, []).append(d)
    flagged: list[tuple[Detection, bool]] = []
    for image_id, image_dets in by_image.items():
        image_dets.sort(key=_det_rank_key)
        flags = match_detections(image_dets, gt_by_image.get(image_id, []), iou_threshold)
        flagged.extend(zip(image_dets, flags.tolist()))
    flagged.sort(key=lambda pair: _pool_rank_key(pair[0]))
    return average_precision([f for _, f in flagged], n_gt)


def _group_mean(per_class: dict[int, float], ids: frozenset[int]) -> float | None:
    vals = [ap for cid, ap in per_class.items() if cid in ids]
    return float(np.mean(vals)) if vals else None


def evaluate(
    dets: list[Detection],
    gt: GroundTruthSet,
    split: CategorySplit,
    protocol: str = "generalized-ap50",
    iou_threshold: float = 0.5,
) -> MetricsReport:
    """Per-class AP50 plus Novel/Base/Overall means (and LVIS-style groups).

    Detections compete jointly over base and novel categories; the split only
    decides how per-class APs aggregate. Classes with zero ground truth are
    excluded from every mean.
    """
    if protocol not in ("generalized-ap50", "lvis-groups"):
        raise ValueError(f"unknown protocol '{protocol}'")
    if protocol == "lvis-groups" and split.groups is None:
        raise SplitError("protocol 'lvis-groups' requires frequency groups in the split file")
    known = split.all_ids
    for d in dets:
        if d.class_id not in known:
            raise SchemaError(f"detection references class {d.class_id} absent from the split")
        if d.image_id not in gt.images:
            raise SchemaError(f"detection references unknown image {d.image_id}")

    evaluated = sorted(cid for cid in known if gt.gt_count(cid) > 0)
    by_class: dict[int, list[Detection]] = {cid: [] for cid in evaluated}
    for d in dets:
        if d.class_id in by_class:
            by_class[d.class_id].append(d)
    per_class = {cid: _class_ap(by_class[cid], gt, cid, iou_threshold) for cid in evaluated}

    groups = None
    group_mean = None
    if protocol == "lvis-groups":
        groups = {name: _group_mean(per_class, ids) for name, ids in split.groups.items()}
        present = [v for v in groups.values() if v is not None]
        group_mean = float(np.mean(present)) if present else None
    return MetricsReport(
        protocol=protocol,
        iou_threshold=iou_threshold,
        per_class=per_class,
        novel=_group_mean(per_class, split.novel),
        base=_group_mean(per_class, split.base),
        overall=float(np.mean(list(per_class.values()))) if per_class else None,
        groups=groups,
        group_mean=group_mean,
    )
