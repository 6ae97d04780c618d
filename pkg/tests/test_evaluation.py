"""Tests for frame-level mAP."""

import numpy as np
import pytest

from sia.errors import DataValidationError, ParseError
from sia.evaluation import (
    average_precision,
    detections_from_scored,
    evaluate,
    parse_detections_csv,
    read_detections_csv,
    split_report,
    write_detections_csv,
)
from sia.geometry import iou
from sia.models.annotations import KeyframeAnnotation
from sia.models.boxes import BoxXYXY
from sia.models.detection import DetectionRecord, ScoredDetection
from sia.models.vocabulary import ActionVocabulary

GT = BoxXYXY(x1=0.0, y1=0.0, x2=0.5, y2=0.5)


def _det(clip, box, score, class_id=0) -> DetectionRecord:
    return DetectionRecord(clip_id=clip, box=box, class_id=class_id, score=score)


def _random_box(rng) -> BoxXYXY:
    x1, y1 = rng.uniform(0, 0.6, size=2)
    w, h = rng.uniform(0.1, 0.4, size=2)
    return BoxXYXY(x1=x1, y1=y1, x2=x1 + w, y2=y1 + h)


CELL = 0.25


def _cell_box(rng, row: int, col: int, lo, hi) -> BoxXYXY:
    """A box confined to one cell of a 4x4 grid, so boxes in different cells never overlap."""
    ox, oy = col * CELL, row * CELL
    x1, y1 = rng.uniform(*lo, size=2)
    x2, y2 = rng.uniform(*hi, size=2)
    return BoxXYXY(x1=ox + x1, y1=oy + y1, x2=ox + x2, y2=oy + y2)


def _cell_fixture(rng):
    """Ground truth and detections where each detection can only ever hit the ground truth of its own cell."""
    gt_boxes, owner, dets = {}, {}, []
    for clip in ("a", "b"):
        cells = [(int(c) // 4, int(c) % 4) for c in rng.choice(16, size=4, replace=False)]
        n_gt = int(rng.integers(1 if clip == "a" else 0, 4))
        gt_boxes[clip] = [_cell_box(rng, r, c, (0.01, 0.05), (0.18, 0.24)) for r, c in cells[:n_gt]]
        for _ in range(int(rng.integers(0, 6))):
            k = int(rng.integers(len(cells)))
            box = _cell_box(rng, *cells[k], (0.0, 0.08), (0.14, 0.25))
            dets.append(_det(clip, box, float(rng.random())))
            owner[len(dets) - 1] = (clip, k) if k < n_gt else None
    return gt_boxes, owner, dets


def _interpolated_ap(dets, gt_boxes, owner, thresh):
    """
    AP from a closed form: a detection is a hit when it clears the threshold
    on its cell's ground truth and no higher-scoring detection already did;
    AP averages, over recall levels i / n_gt, the best precision reached at
    that recall or beyond.
    """
    n_gt = sum(len(b) for b in gt_boxes.values())
    hit = []
    for k, det in enumerate(dets):
        target = owner[k]
        if target is None or iou(det.box, gt_boxes[target[0]][target[1]]) < thresh:
            hit.append(False)
            continue
        rivals = [
            m
            for m, other in enumerate(dets)
            if owner[m] == target
            and other.score > det.score
            and iou(other.box, gt_boxes[target[0]][target[1]]) >= thresh
        ]
        hit.append(not rivals)
    ranked = sorted(range(len(dets)), key=lambda k: -dets[k].score)
    curve = []
    tp = 0
    for rank, k in enumerate(ranked, start=1):
        tp += hit[k]
        curve.append((tp, tp / rank))
    levels = [max((p for t, p in curve if t >= i), default=0.0) for i in range(1, n_gt + 1)]
    return sum(levels) / n_gt


class TestAveragePrecision:
    def test_false_positive_above_true_positive(self):
        miss = BoxXYXY(x1=0.6, y1=0.6, x2=0.9, y2=0.9)
        dets = [_det("c", miss, 0.9), _det("c", GT, 0.8)]
        assert average_precision(dets, {"c": [GT]}) == pytest.approx(0.5)

    def test_matches_closed_form_on_separated_boxes(self):
        rng = np.random.default_rng(0)
        for _ in range(500):
            gt_boxes, owner, dets = _cell_fixture(rng)
            expected = _interpolated_ap(dets, gt_boxes, owner, 0.5)
            assert average_precision(dets, gt_boxes, 0.5) == pytest.approx(expected, abs=1e-9)

    def test_duplicate_detection_counts_once(self):
        other = BoxXYXY(x1=0.6, y1=0.6, x2=0.9, y2=0.9)
        dets = [_det("c", GT, 0.9), _det("c", GT, 0.8), _det("c", other, 0.7)]
        # hits, miss, hit: precision 1 at recall 1/2, then 2/3 at recall 1
        assert average_precision(dets, {"c": [GT, other]}) == pytest.approx(0.5 + 0.5 * 2 / 3)

    def test_lone_duplicate_is_a_false_positive(self):
        dets = [_det("c", GT, 0.9), _det("c", GT, 0.8)]
        assert average_precision(dets, {"c": [GT]}) == pytest.approx(1.0)
        dets = [_det("c", GT, 0.9), _det("c", GT, 0.8), _det("c", GT, 0.7)]
        other = BoxXYXY(x1=0.6, y1=0.6, x2=0.9, y2=0.9)
        # second and third duplicates are misses, so the other box is never recalled
        assert average_precision(dets, {"c": [GT, other]}) == pytest.approx(0.5)

    def test_no_ground_truth_is_undefined(self):
        assert average_precision([_det("c", GT, 0.5)], {"c": []}) is None

    def test_no_detections(self):
        assert average_precision([], {"c": [GT]}) == 0.0

    def test_detections_only_match_their_keyframe(self):
        assert average_precision([_det("other", GT, 0.9)], {"c": [GT], "other": []}) == 0.0

    def test_input_order_is_irrelevant(self):
        rng = np.random.default_rng(1)
        dets = [_det("c", _random_box(rng), float(rng.random())) for _ in range(8)]
        gt = {"c": [_random_box(rng) for _ in range(3)]}
        assert average_precision(dets, gt) == average_precision(list(reversed(dets)), gt)


@pytest.fixture
def vocab():
    return ActionVocabulary.from_names(["walk", "ride", "stand"])


class TestEvaluate:
    def test_perfect_detector(self, vocab):
        gts = [
            KeyframeAnnotation(clip_id="a", boxes=[GT], action_sets=[["walk", "ride"]]),
            KeyframeAnnotation(
                clip_id="b", boxes=[BoxXYXY(x1=0.5, y1=0.5, x2=1.0, y2=1.0)], action_sets=[["walk"]]
            ),
        ]
        dets = [
            _det(ann.clip_id, box, 1.0, vocab.resolve(label))
            for ann in gts
            for box, labels in zip(ann.boxes, ann.action_sets)
            for label in labels
        ]
        report = evaluate(dets, gts, vocab)
        assert report.map == pytest.approx(1.0)
        assert report.per_class["stand"].ap is None
        assert report.evaluated_classes == ["walk", "ride"]
        assert report.per_class["walk"].gt_count == 2

    def test_mean_over_classes(self, vocab):
        gts = [KeyframeAnnotation(clip_id="a", boxes=[GT, GT], action_sets=[["walk"], ["ride"]])]
        report = evaluate([_det("a", GT, 0.9, 0)], gts, vocab, max_workers=2)
        assert report.per_class["walk"].ap == pytest.approx(1.0)
        assert report.per_class["ride"].ap == 0.0
        assert report.map == pytest.approx(0.5)

    def test_report_ignores_detection_order(self, vocab):
        rng = np.random.default_rng(5)
        gts = [
            KeyframeAnnotation(
                clip_id=clip,
                boxes=[_random_box(rng) for _ in range(3)],
                action_sets=[["walk"], ["ride", "walk"], ["stand"]],
            )
            for clip in ("a", "b")
        ]
        dets = [
            _det(clip, _random_box(rng), float(rng.random()), int(rng.integers(3)))
            for clip in ("a", "b")
            for _ in range(10)
        ]
        shuffled = [dets[k] for k in rng.permutation(len(dets))]
        assert evaluate(shuffled, gts, vocab) == evaluate(dets, gts, vocab)

    def test_unknown_clip_or_class(self, vocab):
        gts = [KeyframeAnnotation(clip_id="a", boxes=[GT], action_sets=[["walk"]])]
        with pytest.raises(DataValidationError):
            evaluate([_det("zzz", GT, 0.9)], gts, vocab)
        with pytest.raises(DataValidationError):
            evaluate([_det("a", GT, 0.9, class_id=7)], gts, vocab)

    def test_split_report(self, vocab):
        gts = [KeyframeAnnotation(clip_id="a", boxes=[GT, GT], action_sets=[["walk"], ["ride"]])]
        report = evaluate([_det("a", GT, 0.9, 0)], gts, vocab)
        split = split_report(report, ["walk", "stand"], ["ride"])
        assert split.base_map == pytest.approx(1.0)
        assert split.novel_map == 0.0


def test_detections_from_scored():
    scored = [ScoredDetection(token_index=3, box=GT, p_act=0.9, scores=[0.1, 0.7])]
    records = detections_from_scored("c", scored, [4, 2])
    assert [(r.class_id, r.score) for r in records] == [(4, 0.1), (2, 0.7)]


class TestCsv:
    def test_write_and_read(self, tmp_path):
        records = [_det("a", GT, 0.123456789, 1), _det("b", BoxXYXY(x1=0.1, y1=0.2, x2=0.3, y2=0.4), 0.5)]
        path = tmp_path / "dets.csv"
        write_detections_csv(records, path)
        assert path.read_text().splitlines()[0] == "a,0.000000,0.000000,0.500000,0.500000,1,0.12345679"
        loaded = read_detections_csv(path)
        assert [r.clip_id for r in loaded] == ["a", "b"]
        assert loaded[1].box.as_tuple() == pytest.approx((0.1, 0.2, 0.3, 0.4))

    def test_bad_rows(self):
        with pytest.raises(ParseError) as info:
            parse_detections_csv("a,0,0,1,1,0,0.5\nb,0,0,1\n")
        assert info.value.line == 2
        with pytest.raises(ParseError):
            parse_detections_csv("a,0,0,1,1,zero,0.5\n")
