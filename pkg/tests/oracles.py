"""Independent brute-force references used to verify the fast implementations.

Everything here is deliberately written in plain Python with scalar
arithmetic and straight-line logic, sharing no code with the package.
"""

from __future__ import annotations


def iou_xyxy(a, b) -> float:
    """Scalar IoU of two (x1, y1, x2, y2) tuples."""
    ix = min(a[2], b[2]) - max(a[0], b[0])
    iy = min(a[3], b[3]) - max(a[1], b[1])
    inter = max(ix, 0.0) * max(iy, 0.0)
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    union = area_a + area_b - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def iou_rasterized(a, b, cells: int = 2000) -> float:
    """IoU estimated by counting covered cell centers on a fine grid."""
    x_lo = min(a[0], b[0])
    y_lo = min(a[1], b[1])
    x_hi = max(a[2], b[2])
    y_hi = max(a[3], b[3])
    dx = (x_hi - x_lo) / cells
    dy = (y_hi - y_lo) / cells
    in_a = in_b = in_both = 0
    for iy in range(cells):
        y = y_lo + (iy + 0.5) * dy
        row_a = a[1] <= y <= a[3]
        row_b = b[1] <= y <= b[3]
        if not (row_a or row_b):
            continue
        for ix in range(cells):
            x = x_lo + (ix + 0.5) * dx
            pa = row_a and a[0] <= x <= a[2]
            pb = row_b and b[0] <= x <= b[2]
            in_a += pa
            in_b += pb
            in_both += pa and pb
    union = in_a + in_b - in_both
    return in_both / union if union else 0.0


def greedy_nms(boxes, scores, iou_threshold: float) -> list[int]:
    """O(n^2) greedy suppression; returns kept indices in keep order.

    Candidates are visited by descending score with lexicographic box
    coordinates breaking ties, the same contract the fast path implements.
    """
    order = sorted(range(len(boxes)), key=lambda i: (-scores[i],) + tuple(boxes[i]))
    kept: list[int] = []
    for i in order:
        suppressed = False
        for j in kept:
            if iou_xyxy(boxes[i], boxes[j]) > iou_threshold:
                suppressed = True
                break
        if not suppressed:
            kept.append(i)
    return kept


def greedy_match(dets, gts, iou_threshold: float = 0.5) -> list[bool]:
    """Step-by-step greedy matching for one (image, class) pair.

    ``dets`` are (score, (x1, y1, x2, y2)) tuples already sorted by rank;
    ``gts`` are box tuples. Each detection claims the unmatched GT of highest
    IoU if that IoU reaches the threshold; ties go to the lowest GT index.
    """
    used = [False] * len(gts)
    flags: list[bool] = []
    for _, box in dets:
        best_j = -1
        best_iou = 0.0
        for j, g in enumerate(gts):
            if used[j]:
                continue
            v = iou_xyxy(box, g)
            if v > best_iou:
                best_iou = v
                best_j = j
        if best_j >= 0 and best_iou >= iou_threshold:
            used[best_j] = True
            flags.append(True)
        else:
            flags.append(False)
    return flags


def interpolated_ap(flags, n_gt: int) -> float:
    """101-point interpolated AP by direct scanning, no envelope trick."""
    if n_gt <= 0 or not flags:
        return 0.0
    total = 0.0
    for i in range(101):
        r = i / 100.0
        tp = fp = 0
        best_p = 0.0
        for f in flags:
            if f:
                tp += 1
            else:
                fp += 1
            if tp / n_gt >= r:
                p = tp / (tp + fp)
                if p > best_p:
                    best_p = p
        total += best_p
    return total / 101.0


def evaluate_dataset(detections, annotations, class_ids, iou_threshold: float = 0.5):
    """Straight-line per-class AP50 evaluation.

    detections: (image_id, class_id, score, box-tuple) tuples.
    annotations: (image_id, class_id, box-tuple) tuples.
    Returns {class_id: ap} for classes with at least one GT.
    """
    out = {}
    for cid in class_ids:
        gts = [(img, box) for img, c, box in annotations if c == cid]
        if not gts:
            continue
        images = {img for img, _ in gts} | {d[0] for d in detections if d[1] == cid}
        pooled = []
        for img in images:
            img_dets = [(score, box) for i, c, score, box in detections if i == img and c == cid]
            img_dets.sort(key=lambda t: (-t[0],) + t[1])
            img_gts = [box for i, box in gts if i == img]
            flags = greedy_match(img_dets, img_gts, iou_threshold)
            for (score, box), f in zip(img_dets, flags):
                pooled.append((score, img, box, f))
        pooled.sort(key=lambda t: (-t[0], t[1]) + t[2])
        out[cid] = interpolated_ap([f for _, _, _, f in pooled], len(gts))
    return out


def resize_bilinear_pixel(src_row, out_w: int):
    """Per-pixel half-pixel bilinear resample of a 1-D sequence."""
    import math

    w = len(src_row)
    scale = w / out_w
    out = []
    for i in range(out_w):
        x = (i + 0.5) * scale - 0.5
        x = min(max(x, 0.0), w - 1.0)
        x0 = int(math.floor(x))
        x1 = min(x0 + 1, w - 1)
        f = x - x0
        out.append(src_row[x0] * (1.0 - f) + src_row[x1] * f)
    return out
