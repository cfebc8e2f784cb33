import numpy as np
import pytest

from ovdkit import (
    Box,
    Detection,
    SchemaError,
    SplitError,
    average_precision,
    build_dataset,
    evaluate,
    match_detections,
)

from oracles import evaluate_dataset, greedy_match, interpolated_ap


def dataset(images, annotations, categories, base, novel, groups=None):
    ann = {
        "images": [{"id": i, "width": w, "height": h} for i, w, h in images],
        "annotations": [
            {"id": k + 1, "image_id": i, "category_id": c, "bbox": bbox}
            for k, (i, c, bbox) in enumerate(annotations)
        ],
        "categories": [{"id": c, "name": f"c{c}"} for c in categories],
    }
    split = {"base": base, "novel": novel}
    if groups is not None:
        split["groups"] = groups
    return build_dataset(ann, split)


def det(img, cls, x, y, w, h, score):
    return Detection(image_id=img, class_id=cls, box=Box(x, y, x + w, y + h), score=score)


class TestLoading:
    def test_minimal_document_loads(self):
        gt, split = dataset([(1, 50, 50)], [(1, 1, [5, 5, 10, 10])], [1], base=[1], novel=[])
        assert len(gt.annotations) == 1
        assert gt.gt_count(1) == 1
        assert split.base == {1}

    def test_split_with_unknown_category_errors(self):
        with pytest.raises(SplitError):
            dataset([(1, 50, 50)], [], [1], base=[1, 99], novel=[])

    def test_overlapping_split_errors(self):
        with pytest.raises(SplitError):
            dataset([(1, 50, 50)], [], [1, 2], base=[1, 2], novel=[2])

    def test_negative_bbox_errors(self):
        with pytest.raises(SchemaError):
            dataset([(1, 50, 50)], [(1, 1, [5, 5, -1, 10])], [1], base=[1], novel=[])

    def test_dangling_image_errors(self):
        with pytest.raises(SchemaError):
            dataset([(1, 50, 50)], [(2, 1, [5, 5, 10, 10])], [1], base=[1], novel=[])

    def test_dangling_category_errors(self):
        with pytest.raises(SchemaError):
            dataset([(1, 50, 50)], [(1, 9, [5, 5, 10, 10])], [1], base=[1], novel=[])

    def test_crowd_annotations_rejected(self):
        ann = {
            "images": [{"id": 1, "width": 50, "height": 50}],
            "annotations": [{"id": 1, "image_id": 1, "category_id": 1, "bbox": [0, 0, 5, 5], "iscrowd": 1}],
            "categories": [{"id": 1, "name": "c1"}],
        }
        with pytest.raises(SchemaError):
            build_dataset(ann, {"base": [1], "novel": []})

    def test_box_outside_extent_errors(self):
        with pytest.raises(SchemaError):
            dataset([(1, 50, 50)], [(1, 1, [45, 45, 10, 10])], [1], base=[1], novel=[])


class TestMatching:
    def test_exact_hit_is_tp(self):
        d = [det(1, 1, 10, 10, 5, 5, 0.9)]
        flags = match_detections(d, [Box(10, 10, 15, 15)])
        assert flags.tolist() == [True]

    def test_duplicate_hit_is_tp_fp(self):
        d = [det(1, 1, 10, 10, 5, 5, 0.9), det(1, 1, 10, 10, 5, 5, 0.8)]
        flags = match_detections(d, [Box(10, 10, 15, 15)])
        assert flags.tolist() == [True, False]

    def test_random_cases_match_stepwise_oracle(self):
        rng = np.random.default_rng(31)
        for _ in range(100):
            gts = []
            for _ in range(rng.integers(1, 7)):
                x, y = rng.uniform(0, 40, size=2)
                gts.append(Box(x, y, x + rng.uniform(2, 20), y + rng.uniform(2, 20)))
            dets = []
            for _ in range(rng.integers(1, 7)):
                g = gts[rng.integers(0, len(gts))]
                dx, dy = rng.uniform(-3, 3, size=2)
                dets.append(
                    Detection(1, 1, Box(g.x1 + dx, g.y1 + dy, g.x2 + dx, g.y2 + dy), float(rng.uniform(0, 1)))
                )
            dets.sort(key=lambda d: (-d.score,) + d.box.key())
            got = match_detections(dets, gts).tolist()
            oracle = greedy_match(
                [(d.score, (d.box.x1, d.box.y1, d.box.x2, d.box.y2)) for d in dets],
                [(g.x1, g.y1, g.x2, g.y2) for g in gts],
            )
            assert got == oracle


class TestAveragePrecision:
    def test_single_tp(self):
        assert average_precision([True], 1) == 1.0

    def test_single_fp(self):
        assert average_precision([False], 1) == 0.0

    def test_mixed_flags_match_exact_enumeration(self):
        flags = [True, False, True]
        got = average_precision(flags, 2)
        assert got == pytest.approx(253 / 303, abs=1e-12)
        assert got == pytest.approx(interpolated_ap(flags, 2), abs=1e-12)

    def test_no_gt_no_detections_is_zero(self):
        assert average_precision([], 0) == 0.0

    def test_random_flags_match_oracle(self):
        rng = np.random.default_rng(33)
        for _ in range(200):
            n = int(rng.integers(1, 12))
            flags = rng.random(n) < 0.5
            n_gt = int(rng.integers(max(1, flags.sum()), flags.sum() + 5))
            assert average_precision(flags, n_gt) == pytest.approx(
                interpolated_ap(flags.tolist(), n_gt), abs=1e-12
            )


def perfect_micro():
    gt, split = dataset(
        [(1, 100, 100), (2, 100, 100)],
        [
            (1, 1, [10, 10, 20, 20]),
            (1, 2, [50, 50, 30, 30]),
            (2, 1, [5, 5, 10, 10]),
        ],
        [1, 2],
        base=[1],
        novel=[2],
    )
    dets = [
        det(1, 1, 10, 10, 20, 20, 0.9),
        det(1, 2, 50, 50, 30, 30, 0.8),
        det(2, 1, 5, 5, 10, 10, 0.95),
    ]
    return gt, split, dets


class TestEvaluate:
    def test_perfect_detections_score_hundred(self):
        gt, split, dets = perfect_micro()
        report = evaluate(dets, gt, split)
        assert report.novel == pytest.approx(1.0)
        assert report.base == pytest.approx(1.0)
        assert report.overall == pytest.approx(1.0)
        assert report.to_dict()["ap50"] == {"novel": 100.0, "base": 100.0, "overall": 100.0}

    def test_no_detections_scores_zero(self):
        gt, split, _ = perfect_micro()
        report = evaluate([], gt, split)
        assert report.novel == 0.0
        assert report.base == 0.0
        assert report.overall == 0.0

    def test_unknown_detection_class_errors(self):
        gt, split, dets = perfect_micro()
        with pytest.raises(SchemaError):
            evaluate(dets + [det(1, 42, 0, 0, 5, 5, 0.5)], gt, split)

    def test_unknown_detection_image_errors(self):
        gt, split, dets = perfect_micro()
        with pytest.raises(SchemaError):
            evaluate([det(77, 1, 0, 0, 5, 5, 0.5)], gt, split)

    def test_input_order_invariance(self):
        gt, split, _ = perfect_micro()
        rng = np.random.default_rng(35)
        dets = [
            det(1, 1, rng.uniform(0, 60), rng.uniform(0, 60), 20, 20, float(rng.uniform(0, 1)))
            for _ in range(12)
        ]
        a = evaluate(dets, gt, split)
        shuffled = list(dets)
        rng.shuffle(shuffled)
        b = evaluate(shuffled, gt, split)
        assert a.per_class == b.per_class

    def test_trailing_low_score_detection_never_helps(self):
        gt, split, dets = perfect_micro()
        baseline = evaluate(dets, gt, split)
        extra = det(1, 1, 70, 70, 10, 10, 0.0001)  # below every existing score
        worse = evaluate(dets + [extra], gt, split)
        for cid, ap in worse.per_class.items():
            assert ap <= baseline.per_class[cid] + 1e-12

    def test_overall_is_the_class_count_weighted_mean(self):
        rng = np.random.default_rng(36)
        gt, split = dataset(
            [(1, 100, 100), (2, 100, 100)],
            [
                (1, 1, [10, 10, 20, 20]),
                (1, 2, [40, 40, 20, 20]),
                (2, 2, [5, 5, 10, 10]),
                (2, 3, [30, 30, 25, 25]),
            ],
            [1, 2, 3],
            base=[1, 2],
            novel=[3],
        )
        dets = [
            det(int(rng.integers(1, 3)), int(rng.integers(1, 4)), rng.uniform(0, 60), rng.uniform(0, 60), 20, 20, float(rng.uniform(0, 1)))
            for _ in range(30)
        ]
        report = evaluate(dets, gt, split)
        n_base = sum(1 for c in report.per_class if c in split.base)
        n_novel = sum(1 for c in report.per_class if c in split.novel)
        weighted = (n_base * report.base + n_novel * report.novel) / (n_base + n_novel)
        assert report.overall == pytest.approx(weighted, abs=1e-12)

    def test_duplicate_perfect_detection_does_not_raise_ap(self):
        # a duplicate ranked below the matching hit can never improve AP;
        # at full recall the interpolated rule leaves it unchanged
        gt, split, _ = perfect_micro()
        single = [det(1, 1, 10, 10, 20, 20, 0.9), det(2, 1, 5, 5, 10, 10, 0.9)]
        doubled = single + [det(1, 1, 10, 10, 20, 20, 0.8)]
        a = evaluate(single, gt, split)
        b = evaluate(doubled, gt, split)
        assert b.per_class[1] <= a.per_class[1]

    def test_false_positive_ranked_above_tp_strictly_lowers_ap(self):
        gt, split, _ = perfect_micro()
        hit = [det(1, 1, 10, 10, 20, 20, 0.5), det(2, 1, 5, 5, 10, 10, 0.5)]
        spoiled = hit + [det(1, 1, 70, 70, 9, 9, 0.99)]
        assert evaluate(spoiled, gt, split).per_class[1] < evaluate(hit, gt, split).per_class[1]

    def test_randomized_micro_datasets_match_brute_force(self):
        rng = np.random.default_rng(37)
        for _ in range(25):
            compare_with_oracle(rng)

    def test_lvis_groups_protocol(self):
        gt, split = dataset(
            [(1, 100, 100)],
            [
                (1, 1, [10, 10, 20, 20]),
                (1, 2, [40, 40, 20, 20]),
                (1, 3, [70, 70, 20, 20]),
            ],
            [1, 2, 3],
            base=[2, 3],
            novel=[1],
            groups={"rare": [1], "common": [2], "frequent": [3]},
        )
        dets = [
            det(1, 1, 10, 10, 20, 20, 0.9),
            det(1, 2, 40, 40, 20, 20, 0.9),
            det(1, 3, 0, 0, 5, 5, 0.9),  # miss
        ]
        report = evaluate(dets, gt, split, protocol="lvis-groups")
        assert report.groups["rare"] == pytest.approx(1.0)
        assert report.groups["common"] == pytest.approx(1.0)
        assert report.groups["frequent"] == pytest.approx(0.0)
        assert report.group_mean == pytest.approx(2 / 3)
        doc = report.to_dict()["lvis"]
        assert doc["mean_of_groups"] == pytest.approx(100 * 2 / 3)
        assert doc["mean_all_classes"] == pytest.approx(100 * 2 / 3)

    def test_lvis_protocol_requires_groups(self):
        gt, split, dets = perfect_micro()
        with pytest.raises(SplitError):
            evaluate(dets, gt, split, protocol="lvis-groups")

    def test_unknown_protocol_rejected(self):
        gt, split, dets = perfect_micro()
        with pytest.raises(ValueError):
            evaluate(dets, gt, split, protocol="voc")


def compare_with_oracle(rng):
    """One random micro-dataset checked against the brute-force evaluator."""
    n_images = int(rng.integers(1, 6))
    n_classes = int(rng.integers(1, 4))
    class_ids = list(range(1, n_classes + 1))
    images = [(i, 100, 100) for i in range(1, n_images + 1)]
    annotations = []
    for i in range(1, n_images + 1):
        for _ in range(int(rng.integers(1, 7))):
            x, y = rng.uniform(0, 70, size=2)
            annotations.append(
                (i, int(rng.integers(1, n_classes + 1)), [x, y, rng.uniform(4, 28), rng.uniform(4, 28)])
            )
    base = [c for c in class_ids if c % 2 == 1]
    novel = [c for c in class_ids if c % 2 == 0]
    gt, split = dataset(images, annotations, class_ids, base=base, novel=novel)

    dets = []
    for _ in range(int(rng.integers(0, 26))):
        img = int(rng.integers(1, n_images + 1))
        cls = int(rng.integers(1, n_classes + 1))
        if rng.random() < 0.5 and annotations:
            src = annotations[rng.integers(0, len(annotations))]
            x, y, w, h = src[2]
            x += rng.uniform(-4, 4)
            y += rng.uniform(-4, 4)
        else:
            x, y = rng.uniform(0, 70, size=2)
            w, h = rng.uniform(4, 28, size=2)
        x = float(np.clip(x, 0, 70))
        y = float(np.clip(y, 0, 70))
        dets.append(det(img, cls, x, y, float(w), float(h), float(rng.uniform(0, 1))))

    report = evaluate(dets, gt, split)
    oracle = evaluate_dataset(
        [(d.image_id, d.class_id, d.score, (d.box.x1, d.box.y1, d.box.x2, d.box.y2)) for d in dets],
        [(a.image_id, a.class_id, (a.box.x1, a.box.y1, a.box.x2, a.box.y2)) for a in gt.annotations],
        class_ids,
    )
    assert set(report.per_class) == set(oracle)
    for cid, ap in report.per_class.items():
        assert ap == pytest.approx(oracle[cid], abs=1e-9)
    return report, oracle
