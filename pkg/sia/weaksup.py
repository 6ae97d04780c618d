"""
Weak-supervision label expansion for clips that carry a global action.

NWS appends the global action to every box of the clip. AWS runs a detector
trained with NWS labels, matches its tokens to the ground-truth boxes and
appends the global action only to the boxes whose matched embeddings are
most similar to the global action's descriptors.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Literal, Optional, Sequence, Union

import torch

from sia.data.sampling import sample_clip_frames
from sia.detector.detector import DetectorOutput, SiaDetector
from sia.matching import match_clip
from sia.models.annotations import DatasetManifest, KeyframeAnnotation, ManifestEntry, Provenance
from sia.models.config import LossWeights
from sia.models.detection import DetectionTriplet
from sia.models.pseudolabel import PseudolabelRecord
from sia.models.vocabulary import ActionVocabulary, DescriptorBank
from sia.vocab.bank import averaged_similarity, embed_bank

logger = logging.getLogger(__name__)

Mode = Literal["NWS", "AWS"]


def nws_expand(ann: KeyframeAnnotation) -> PseudolabelRecord:
    """
    Append the clip's global action to every box.

    Appending a label a box already has changes nothing, so expanding twice
    equals expanding once. A clip without a global action yields a skipped
    record with a warning.
    """
    if ann.global_action is None:
        return PseudolabelRecord(
            clip_id=ann.clip_id,
            method="NWS",
            original_actions=ann.action_sets,
            pseudo_actions=[[] for _ in ann.action_sets],
            skipped=True,
            warning="no global action",
        )
    return PseudolabelRecord(
        clip_id=ann.clip_id,
        method="NWS",
        global_action=ann.global_action,
        original_actions=ann.action_sets,
        pseudo_actions=[[ann.global_action] for _ in ann.action_sets],
    )


def aws_assign(
    ann: KeyframeAnnotation,
    triplets: Union[DetectorOutput, Sequence[DetectionTriplet]],
    bank: DescriptorBank,
    top_k: int = 1,
    min_similarity: Optional[float] = None,
    lambda_actor: float = 2.0,
    lambda_box: float = 2.0,
    vocab: Optional[ActionVocabulary] = None,
) -> PseudolabelRecord:
    """
    Give the global action to the ``top_k`` matched boxes most similar to it.

    Args:
        ann: Annotation with a global action
        triplets: Detector output on this clip
        bank: Descriptor bank with cached embeddings for the global action
        top_k: Number of boxes that receive the label
        min_similarity: Optional gate on the averaged similarity
        lambda_actor: Matching weight of the actor term
        lambda_box: Matching weight of the box term
        vocab: Vocabulary used to map a global action given by external id
            to its class name

    Returns:
        Record whose pseudo-actions hold the global action on chosen boxes;
        ties in similarity go to the lower box index
    """
    if top_k < 1:
        raise ValueError("top_k must be at least 1")
    base = dict(clip_id=ann.clip_id, method="AWS", original_actions=ann.action_sets)
    if ann.global_action is None:
        return PseudolabelRecord(
            **base, pseudo_actions=[[] for _ in ann.action_sets], skipped=True, warning="no global action"
        )
    if ann.num_boxes == 0:
        return PseudolabelRecord(
            **base, global_action=ann.global_action, skipped=True, warning="no ground-truth boxes"
        )

    action = vocab.canonical_name(ann.global_action) if vocab is not None else ann.global_action
    output = triplets if isinstance(triplets, DetectorOutput) else DetectorOutput.from_triplets(triplets)
    assignment = match_clip(output, ann, lambda_actor, lambda_box, canonical=True)
    text = bank.embeddings_for(action).double().cpu().numpy()
    emb = output.embeddings.detach().double().cpu().numpy()

    similarities: List[Optional[float]] = [None] * ann.num_boxes
    for i, j in assignment.pairs:
        similarities[j] = averaged_similarity(emb[i], text)

    eligible = [
        j
        for j, s in enumerate(similarities)
        if s is not None and (min_similarity is None or s >= min_similarity)
    ]
    chosen = sorted(eligible, key=lambda j: (-similarities[j], j))[:top_k]

    pseudo: List[List[str]] = [[] for _ in range(ann.num_boxes)]
    for j in chosen:
        pseudo[j] = [action]
    warning = None
    if len(assignment.pairs) < ann.num_boxes:
        warning = f"{ann.num_boxes - len(assignment.pairs)} boxes unmatched"
    return PseudolabelRecord(
        **base,
        global_action=action,
        pseudo_actions=pseudo,
        similarities=similarities,
        similarity=similarities[chosen[0]] if chosen else None,
        warning=warning,
    )


def apply_record(
    entry: ManifestEntry,
    record: PseudolabelRecord,
    checkpoint_hash: Optional[str] = None,
    top_k: Optional[int] = None,
    min_similarity: Optional[float] = None,
) -> ManifestEntry:
    """Attach a record's pseudo-actions and provenance; failed or skipped records change nothing."""
    if not record.success or record.skipped:
        return entry
    provenance = Provenance(
        method=record.method,
        checkpoint_hash=checkpoint_hash if record.method == "AWS" else None,
        top_k=top_k if record.method == "AWS" else None,
        min_similarity=min_similarity if record.method == "AWS" else None,
        similarities=record.similarities,
    )
    return entry.model_copy(
        update={"pseudo_actions": record.pseudo_actions, "provenance": provenance}
    )


@dataclass
class RefinementResult:
    manifest: DatasetManifest
    records: List[PseudolabelRecord] = field(default_factory=list)

    @property
    def failed(self) -> List[PseudolabelRecord]:
        return [r for r in self.records if not r.success]


def _read_log(
    path: Path,
    mode: Mode,
    checkpoint_hash: Optional[str] = None,
    top_k: Optional[int] = None,
    min_similarity: Optional[float] = None,
) -> Dict[str, PseudolabelRecord]:
    """Load reusable records: same method, successful and (AWS) produced with the same settings."""
    done: Dict[str, PseudolabelRecord] = {}
    if not path.exists():
        return done
    stale = 0
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        record = PseudolabelRecord.model_validate_json(line)
        if record.method != mode or not record.success:
            continue
        if mode == "AWS" and (
            record.checkpoint_hash != checkpoint_hash
            or record.top_k != top_k
            or record.min_similarity != min_similarity
        ):
            stale += 1
            continue
        done[record.clip_id] = record
    if stale:
        logger.info(f"Ignoring {stale} records in {path} written with other AWS settings")
    return done


def run_refinement(
    manifest: DatasetManifest,
    mode: Mode,
    detector: Optional[SiaDetector] = None,
    bank: Optional[DescriptorBank] = None,
    *,
    top_k: int = 1,
    min_similarity: Optional[float] = None,
    weights: Optional[LossWeights] = None,
    stride: int = 4,
    root: Optional[Path] = None,
    log_path: Optional[Union[str, Path]] = None,
    checkpoint_hash: Optional[str] = None,
    max_workers: int = 1,
    vocab: Optional[ActionVocabulary] = None,
) -> RefinementResult:
    """
    Expand the labels of every global-action clip in a manifest.

    Clips without a global action pass through untouched. With ``log_path``
    each processed clip appends one JSON record; records already in the log
    are reused so an interrupted run resumes where it stopped. AWS records are
    only reused when they were written with the same checkpoint hash, ``top_k``
    and ``min_similarity``.

    Args:
        manifest: Input manifest
        mode: ``NWS`` or ``AWS``
        detector: NWS-trained detector (AWS only; NWS never reads it)
        bank: Descriptor bank covering the global actions (AWS only)
        top_k: Boxes per clip that receive the global action (AWS)
        min_similarity: Optional similarity gate (AWS)
        weights: Matching weights (AWS)
        stride: Frame sampling stride (AWS)
        root: Directory relative frame paths resolve against
        log_path: JSON-lines record log used for resuming
        checkpoint_hash: Recorded in AWS provenance
        max_workers: Concurrent clip workers
        vocab: Vocabulary for global actions given by external id (AWS)

    Returns:
        Refined manifest and one record per global-action clip, in manifest order
    """
    if mode == "AWS":
        if detector is None or bank is None:
            raise ValueError("AWS refinement needs a detector and a descriptor bank")
        if not bank.has_embeddings or bank.encoder_version != detector.text_encoder_version():
            embed_bank(bank, detector)
    weights = weights or LossWeights()
    log = Path(log_path) if log_path is not None else None
    done = _read_log(log, mode, checkpoint_hash, top_k, min_similarity) if log is not None else {}
    if done:
        logger.info(f"Resuming refinement: {len(done)} clips already in {log}")

    targets = [e for e in manifest.entries if e.annotation.global_action is not None]
    pending = [e for e in targets if e.clip_id not in done]

    def _process(entry: ManifestEntry) -> PseudolabelRecord:
        ann = entry.annotation
        try:
            if mode == "NWS":
                return nws_expand(ann)
            clip = sample_clip_frames(entry.source, detector.config.frames, stride, root, entry.clip_id)
            frames = torch.from_numpy(clip.frames).unsqueeze(0)
            with torch.no_grad():
                output = detector(frames.to(detector.logit_scale.dtype)).clip(0)
            return aws_assign(
                ann,
                output,
                bank,
                top_k=top_k,
                min_similarity=min_similarity,
                lambda_actor=weights.lambda_actor,
                lambda_box=weights.lambda_box,
                vocab=vocab,
            ).model_copy(
                update={"checkpoint_hash": checkpoint_hash, "top_k": top_k, "min_similarity": min_similarity}
            )
        except Exception as e:
            logger.error(f"Refinement of {entry.clip_id} failed: {e}")
            return PseudolabelRecord(
                clip_id=entry.clip_id,
                method=mode,
                global_action=ann.global_action,
                original_actions=ann.action_sets,
                success=False,
                error=str(e),
            )

    fresh: Dict[str, PseudolabelRecord] = {}
    handle = open(log, "a", encoding="utf-8") if log is not None else None
    try:
        with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
            # map() yields in submission order, so the log is written in manifest order
            for record in pool.map(_process, pending):
                fresh[record.clip_id] = record
                if handle is not None:
                    handle.write(record.model_dump_json() + "\n")
                    handle.flush()
    finally:
        if handle is not None:
            handle.close()

    records: List[PseudolabelRecord] = []
    entries: List[ManifestEntry] = []
    for entry in manifest.entries:
        record = done.get(entry.clip_id) or fresh.get(entry.clip_id)
        if record is None:
            entries.append(entry)
            continue
        records.append(record)
        if record.warning:
            logger.warning(f"{entry.clip_id}: {record.warning}")
        entries.append(apply_record(entry, record, checkpoint_hash, top_k, min_similarity))

    refined = manifest.model_copy(update={"entries": entries})
    logger.info(
        f"{mode} refinement: {len(records)} global-action clips, "
        f"{sum(1 for r in records if not r.success)} failed"
    )
    return RefinementResult(manifest=refined, records=records)
