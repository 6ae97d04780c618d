"""Dataset manifest construction and JSON persistence."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Iterable, Optional, Union

from pydantic import ValidationError

from sia.config.settings import get_settings
from sia.errors import DataValidationError
from sia.models.annotations import (
    MANIFEST_SCHEMA_VERSION,
    DatasetManifest,
    FrameLocator,
    KeyframeAnnotation,
    ManifestEntry,
)
from sia.utils import atomic_write_text

logger = logging.getLogger(__name__)


def build_manifest(
    annotations: Iterable[KeyframeAnnotation],
    vocabulary_ref: str,
    frames_dir: str = "frames",
    keyframe: Optional[int] = None,
) -> DatasetManifest:
    """
    Pair annotations with raw frame files named after their clip ids.

    Args:
        annotations: Keyframe annotations
        vocabulary_ref: Path of the vocabulary document, relative to the manifest
        frames_dir: Directory holding ``{clip_id}.raw`` frame files
        keyframe: Source keyframe index; None selects the middle frame
    """
    entries = [
        ManifestEntry(
            clip_id=ann.clip_id,
            source=FrameLocator(kind="raw", path=f"{frames_dir}/{ann.clip_id}.raw", keyframe=keyframe),
            annotation=ann,
        )
        for ann in annotations
    ]
    return DatasetManifest(vocabulary_ref=vocabulary_ref, entries=entries)


def manifest_to_json(manifest: DatasetManifest) -> str:
    return manifest.model_dump_json(indent=2, exclude_none=True) + "\n"


def save_manifest(manifest: DatasetManifest, path: Union[str, Path]) -> None:
    atomic_write_text(path, manifest_to_json(manifest))
    logger.debug(f"Wrote manifest with {len(manifest.entries)} clips to {path}")


def load_manifest(path: Union[str, Path]) -> DatasetManifest:
    """
    Read and validate a manifest document.

    Raises:
        DataValidationError: Unsupported schema version or invalid content
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        manifest = DatasetManifest.model_validate_json(text)
    except ValidationError as e:
        raise DataValidationError(f"invalid manifest {path}: {e}") from None
    if manifest.schema_version != MANIFEST_SCHEMA_VERSION:
        raise DataValidationError(
            f"manifest {path} has schema_version {manifest.schema_version!r}, "
            f"expected {MANIFEST_SCHEMA_VERSION!r}"
        )
    return manifest


def resolve_relative(manifest_path: Union[str, Path], ref: str) -> Path:
    """Resolve a path stored in a manifest (SIA_DATA_DIR, else the manifest's directory)."""
    return get_settings().resolve_path(ref, Path(manifest_path).parent)
