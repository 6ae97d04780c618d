"""
Frame-level mean average precision.

Multi-label ground truth is expanded to one (box, class) instance per label.
Detections only match ground truth on the same keyframe. AP uses all-point
interpolation over the precision envelope.
"""

from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Union

import numpy as np

from sia.errors import DataValidationError, ParseError
from sia.geometry import iou
from sia.models.annotations import KeyframeAnnotation
from sia.models.boxes import BoxXYXY
from sia.models.detection import (
    BenchmarkReport,
    ClassResult,
    DetectionRecord,
    EvalReport,
    ScoredDetection,
    SplitReport,
)
from sia.models.vocabulary import ActionVocabulary
from sia.utils import atomic_write_text

logger = logging.getLogger(__name__)

DETECTION_FIELDS = ("clip_id", "x1", "y1", "x2", "y2", "class_id", "score")


def _rank_key(d: DetectionRecord):
    return (-d.score, d.clip_id, d.box.as_tuple())


def average_precision(
    detections: Sequence[DetectionRecord],
    gt_boxes: Mapping[str, Sequence[BoxXYXY]],
    iou_thresh: float = 0.5,
) -> Optional[float]:
    """
    AP of one class.

    Args:
        detections: Detections of the class, any order
        gt_boxes: Ground-truth boxes of the class per clip id
        iou_thresh: Minimum IoU for a true positive

    Returns:
        AP in [0, 1], or None when the class has no ground truth
    """
    n_gt = sum(len(boxes) for boxes in gt_boxes.values())
    if n_gt == 0:
        return None
    if not detections:
        return 0.0

    taken: Dict[str, List[bool]] = {clip: [False] * len(b) for clip, b in gt_boxes.items()}
    hits = np.zeros(len(detections), dtype=np.float64)
    for rank, det in enumerate(sorted(detections, key=_rank_key)):
        boxes = gt_boxes.get(det.clip_id, ())
        best, best_j = -1.0, -1
        for j, gt in enumerate(boxes):
            if taken[det.clip_id][j]:
                continue
            overlap = iou(det.box, gt)
            if overlap > best:
                best, best_j = overlap, j
        if best_j >= 0 and best >= iou_thresh:
            taken[det.clip_id][best_j] = True
            hits[rank] = 1.0

    tp = np.cumsum(hits)
    recall = tp / n_gt
    precision = tp / np.arange(1, len(hits) + 1)

    mrec = np.concatenate(([0.0], recall, [1.0]))
    mpre = np.concatenate(([0.0], precision, [0.0]))
    for i in range(len(mpre) - 2, -1, -1):
        mpre[i] = max(mpre[i], mpre[i + 1])
    steps = np.nonzero(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]))


def expand_ground_truth(
    gts: Iterable[KeyframeAnnotation],
    vocab: ActionVocabulary,
) -> Dict[int, Dict[str, List[BoxXYXY]]]:
    """Per class id, per clip id: the boxes labelled with that class."""
    per_class: Dict[int, Dict[str, List[BoxXYXY]]] = {c.id: {} for c in vocab.classes}
    for ann in gts:
        for class_id in per_class:
            per_class[class_id].setdefault(ann.clip_id, [])
        for box, actions in zip(ann.boxes, ann.action_sets):
            for label in actions:
                per_class[vocab.resolve(label)][ann.clip_id].append(box)
    return per_class


def evaluate(
    detections: Iterable[DetectionRecord],
    gts: Iterable[KeyframeAnnotation],
    vocab: ActionVocabulary,
    iou_thresh: float = 0.5,
    max_workers: int = 1,
) -> EvalReport:
    """
    Frame-level mAP over a set of keyframes.

    Args:
        detections: Detection records of any order
        gts: Ground-truth annotations; every detection's clip must be here
        vocab: Vocabulary the class ids refer to
        iou_thresh: IoU threshold
        max_workers: Threads for per-class AP

    Returns:
        Report keyed by class name in id order; classes without ground truth
        have ``ap=None`` and are left out of the mean

    Raises:
        DataValidationError: Unknown class id or clip id
        UnknownClassError: Ground-truth label outside the vocabulary
    """
    gts = list(gts)
    gt_by_class = expand_ground_truth(gts, vocab)
    clips = {ann.clip_id for ann in gts}

    by_class: Dict[int, List[DetectionRecord]] = {c.id: [] for c in vocab.classes}
    for det in detections:
        if det.class_id not in by_class:
            raise DataValidationError(f"detection class_id {det.class_id} not in vocabulary")
        if det.clip_id not in clips:
            raise DataValidationError(f"detection for unknown clip {det.clip_id!r}")
        by_class[det.class_id].append(det)

    class_ids = [c.id for c in vocab.classes]

    def _ap(class_id: int) -> Optional[float]:
        return average_precision(by_class[class_id], gt_by_class[class_id], iou_thresh)

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            aps = list(pool.map(_ap, class_ids))
    else:
        aps = [_ap(c) for c in class_ids]

    per_class: Dict[str, ClassResult] = {}
    for class_id, ap in zip(class_ids, aps):
        count = sum(len(b) for b in gt_by_class[class_id].values())
        per_class[vocab.name_of(class_id)] = ClassResult(ap=ap, gt_count=count)

    scored = [ap for ap in aps if ap is not None]
    if not scored:
        logger.warning("No class has ground truth; mAP reported as 0")
    mean_ap = float(np.mean(scored)) if scored else 0.0
    return EvalReport(iou_threshold=iou_thresh, map=mean_ap, per_class=per_class)


def detections_from_scored(
    clip_id: str,
    scored: Sequence[ScoredDetection],
    class_ids: Sequence[int],
) -> List[DetectionRecord]:
    """One record per (surviving token, class column)."""
    records = []
    for det in scored:
        for class_id, score in zip(class_ids, det.scores):
            records.append(DetectionRecord(clip_id=clip_id, box=det.box, class_id=class_id, score=score))
    return records


def split_report(
    report: EvalReport,
    base_classes: Sequence[str],
    novel_classes: Sequence[str],
) -> SplitReport:
    """Mean AP over base classes and over novel classes separately."""

    def _mean(names: Sequence[str]) -> Optional[float]:
        aps = [report.per_class[n].ap for n in names if n in report.per_class]
        aps = [ap for ap in aps if ap is not None]
        return float(np.mean(aps)) if aps else None

    return SplitReport(
        iou_threshold=report.iou_threshold,
        base_map=_mean(base_classes),
        novel_map=_mean(novel_classes),
        base_classes=list(base_classes),
        novel_classes=list(novel_classes),
    )


def detections_to_csv(records: Iterable[DetectionRecord]) -> str:
    """``clip_id,x1,y1,x2,y2,class_id,score`` rows, 6-decimal boxes, 8-decimal scores."""
    lines = []
    for r in records:
        x1, y1, x2, y2 = r.box.as_tuple()
        lines.append(
            f"{r.clip_id},{x1:.6f},{y1:.6f},{x2:.6f},{y2:.6f},{r.class_id},{r.score:.8f}\n"
        )
    return "".join(lines)


def write_detections_csv(records: Iterable[DetectionRecord], path: Union[str, Path]) -> None:
    atomic_write_text(path, detections_to_csv(records))


def parse_detections_csv(text: str) -> List[DetectionRecord]:
    """
    Read a detection dump.

    Raises:
        ParseError: Wrong field count or non-numeric values
    """
    records = []
    for line, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row:
            continue
        if len(row) != len(DETECTION_FIELDS):
            raise ParseError(f"expected {len(DETECTION_FIELDS)} fields, got {len(row)}", line)
        try:
            box = BoxXYXY.from_sequence(row[1:5])
            records.append(
                DetectionRecord(clip_id=row[0], box=box, class_id=int(row[5]), score=float(row[6]))
            )
        except ValueError as e:
            raise ParseError(str(e).splitlines()[0], line) from None
    return records


def read_detections_csv(path: Union[str, Path]) -> List[DetectionRecord]:
    return parse_detections_csv(Path(path).read_text(encoding="utf-8"))


def write_report(report: Union[EvalReport, SplitReport, BenchmarkReport], path: Union[str, Path]) -> None:
    atomic_write_text(path, report.model_dump_json(indent=2) + "\n")
