"""File-level NWS/AWS refinement runs."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional, Union

from sia.data.manifest import load_manifest, resolve_relative, save_manifest
from sia.detector.checkpoint import load_detector
from sia.models.config import ModelConfig
from sia.services.inference import ensure_embedded
from sia.vocab.bank import class_names_bank, load_descriptor_bank
from sia.vocab.vocabulary import load_vocabulary
from sia.weaksup import Mode, RefinementResult, run_refinement

logger = logging.getLogger(__name__)


def refine_manifest_file(
    manifest_path: Union[str, Path],
    out_path: Union[str, Path],
    mode: Mode,
    *,
    checkpoint: Optional[Union[str, Path]] = None,
    expected: Optional[ModelConfig] = None,
    bank_path: Optional[Union[str, Path]] = None,
    top_k: int = 1,
    min_similarity: Optional[float] = None,
    stride: int = 4,
    log_path: Optional[Union[str, Path]] = None,
    max_workers: int = 1,
) -> RefinementResult:
    """
    Refine a manifest on disk and write the result.

    For AWS the checkpoint is loaded and checked before anything is read or
    written, so a config mismatch leaves no output behind.

    Raises:
        CheckpointMismatchError: Checkpoint does not match ``expected``
        ValueError: AWS without a checkpoint
    """
    detector = bank = vocab = None
    checkpoint_hash = None
    if mode == "AWS":
        if checkpoint is None:
            raise ValueError("AWS refinement needs --checkpoint")
        detector, ckpt = load_detector(checkpoint, expected)
        checkpoint_hash = ckpt.digest

    manifest_path = Path(manifest_path)
    manifest = load_manifest(manifest_path)
    if mode == "AWS":
        vocab = load_vocabulary(resolve_relative(manifest_path, manifest.vocabulary_ref))
        bank = load_descriptor_bank(Path(bank_path), vocab) if bank_path else class_names_bank(vocab)
        ensure_embedded(detector, bank)

    result = run_refinement(
        manifest,
        mode,
        detector,
        bank,
        top_k=top_k,
        min_similarity=min_similarity,
        stride=stride,
        root=manifest_path.parent,
        log_path=log_path,
        checkpoint_hash=checkpoint_hash,
        max_workers=max_workers,
        vocab=vocab,
    )
    save_manifest(result.manifest, out_path)
    logger.info(f"Wrote {mode}-refined manifest to {out_path}")
    return result
