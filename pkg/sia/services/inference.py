"""Running a detector over a manifest and scoring it."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import torch

from sia.cache.factory import get_cache
from sia.config.settings import get_settings
from sia.data.filters import apply_blocklist, canonicalize_labels
from sia.data.sampling import sample_clip_frames
from sia.detector.detector import SiaDetector
from sia.detector.scoring import score_actions
from sia.evaluation import detections_from_scored, evaluate
from sia.models.annotations import DatasetManifest
from sia.models.detection import DetectionRecord, EvalReport
from sia.models.vocabulary import ActionVocabulary, DescriptorBank
from sia.vocab.bank import embed_bank

logger = logging.getLogger(__name__)


def ensure_embedded(detector: SiaDetector, bank: DescriptorBank) -> DescriptorBank:
    """Attach descriptor embeddings from this detector's text tower, via the shared cache."""
    if bank.has_embeddings and bank.encoder_version == detector.text_encoder_version():
        return bank
    return embed_bank(bank, detector, cache=get_cache(config=get_settings().cache))


@torch.no_grad()
def detect_manifest(
    detector: SiaDetector,
    manifest: DatasetManifest,
    vocab: ActionVocabulary,
    bank: DescriptorBank,
    *,
    stride: int = 4,
    p_act_threshold: float = 0.5,
    root: Optional[Path] = None,
) -> List[DetectionRecord]:
    """
    Detect and score actions on every keyframe of a manifest.

    Returns:
        One record per surviving token and vocabulary class, in manifest order
    """
    ensure_embedded(detector, bank)
    names = vocab.names
    class_ids = [vocab.resolve(n) for n in names]
    dtype = detector.logit_scale.dtype
    records: List[DetectionRecord] = []
    for entry in manifest.entries:
        clip = sample_clip_frames(entry.source, detector.config.frames, stride, root, entry.clip_id)
        frames = torch.from_numpy(clip.frames).to(dtype).unsqueeze(0)
        output = detector(frames).clip(0)
        scored = score_actions(output, bank, p_act_threshold, detector.scale(), class_names=names)
        records.extend(detections_from_scored(entry.clip_id, scored, class_ids))
    logger.debug(f"Scored {len(manifest.entries)} clips into {len(records)} detections")
    return records


def evaluate_manifest(
    detector: SiaDetector,
    manifest: DatasetManifest,
    vocab: ActionVocabulary,
    bank: DescriptorBank,
    *,
    iou_thresh: float = 0.5,
    p_act_threshold: float = 0.5,
    stride: int = 4,
    root: Optional[Path] = None,
    blocklist: Sequence[str] = (),
    max_workers: int = 1,
) -> Tuple[EvalReport, List[DetectionRecord]]:
    """
    Frame-level mAP of a detector on a manifest.

    Ground truth is the original annotation; pseudo-actions are never scored.
    """
    gts = apply_blocklist(manifest.annotations(include_pseudo=False), blocklist)
    gts = canonicalize_labels(gts, vocab)
    records = detect_manifest(
        detector, manifest, vocab, bank, stride=stride, p_act_threshold=p_act_threshold, root=root
    )
    report = evaluate(records, gts, vocab, iou_thresh=iou_thresh, max_workers=max_workers)
    logger.info(f"f-mAP@{iou_thresh}: {report.map:.4f} over {len(report.evaluated_classes)} classes")
    return report, records
