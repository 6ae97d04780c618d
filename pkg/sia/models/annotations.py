"""Keyframe annotations, frame locators and dataset manifests."""

from __future__ import annotations

from typing import Dict, List, Literal, Optional, Set

from pydantic import BaseModel, Field, field_validator, model_validator

from sia.models.boxes import BoxXYXY

MANIFEST_SCHEMA_VERSION = "1"


def _canonical_set(labels) -> List[str]:
    return sorted({str(label) for label in labels})


class KeyframeAnnotation(BaseModel):
    """
    Human boxes on one keyframe, each with a multi-label action set.

    Action sets are stored as sorted, de-duplicated lists so that serialized
    annotations are byte-stable.
    """

    clip_id: str
    boxes: List[BoxXYXY] = Field(default_factory=list)
    action_sets: List[List[str]] = Field(default_factory=list)
    global_action: Optional[str] = None

    # AVA provenance, kept for lossless CSV round trips
    video_id: Optional[str] = None
    timestamp: Optional[str] = None
    person_ids: Optional[List[Optional[str]]] = None

    @field_validator("action_sets", mode="before")
    @classmethod
    def _canonicalize_sets(cls, value):
        return [_canonical_set(s) for s in value]

    @model_validator(mode="after")
    def _check_parallel(self) -> "KeyframeAnnotation":
        if len(self.boxes) != len(self.action_sets):
            raise ValueError(
                f"{self.clip_id}: {len(self.boxes)} boxes but "
                f"{len(self.action_sets)} action sets"
            )
        if self.person_ids is not None and len(self.person_ids) != len(self.boxes):
            raise ValueError(f"{self.clip_id}: person_ids not parallel to boxes")
        return self

    @property
    def num_boxes(self) -> int:
        return len(self.boxes)

    def labels(self) -> Set[str]:
        """All action identifiers used on this keyframe."""
        out: Set[str] = set()
        for actions in self.action_sets:
            out.update(actions)
        return out


class FrameLocator(BaseModel):
    """Where a clip's frames live and which source frame is the keyframe."""

    kind: str = "raw"
    path: str
    # None selects the middle frame of the source
    keyframe: Optional[int] = Field(default=None, ge=0)
    # Sampling stride fixed by the source itself (pre-cut clips); None defers to the run
    stride: Optional[int] = Field(default=None, ge=1)


class Provenance(BaseModel):
    """How the pseudo-actions of a refined entry were produced."""

    method: Literal["NWS", "AWS"]
    checkpoint_hash: Optional[str] = None
    top_k: Optional[int] = None
    min_similarity: Optional[float] = None
    similarities: Optional[List[Optional[float]]] = None


class ManifestEntry(BaseModel):
    """One clip of a dataset: frame source plus keyframe annotation."""

    clip_id: str
    source: FrameLocator
    annotation: KeyframeAnnotation

    # Present only on refined manifests
    pseudo_actions: Optional[List[List[str]]] = None
    provenance: Optional[Provenance] = None

    @field_validator("pseudo_actions", mode="before")
    @classmethod
    def _canonicalize_pseudo(cls, value):
        if value is None:
            return None
        return [_canonical_set(s) for s in value]

    @model_validator(mode="after")
    def _check_ids(self) -> "ManifestEntry":
        if self.annotation.clip_id != self.clip_id:
            raise ValueError(
                f"entry {self.clip_id} carries annotation for {self.annotation.clip_id}"
            )
        if self.pseudo_actions is not None and len(self.pseudo_actions) != len(
            self.annotation.boxes
        ):
            raise ValueError(f"{self.clip_id}: pseudo_actions not parallel to boxes")
        return self

    def training_annotation(self) -> KeyframeAnnotation:
        """Annotation with pseudo-actions merged into the original action sets."""
        if not self.pseudo_actions:
            return self.annotation
        merged = [
            list(original) + list(pseudo)
            for original, pseudo in zip(self.annotation.action_sets, self.pseudo_actions)
        ]
        return self.annotation.model_copy(update={"action_sets": _merge_sets(merged)})


def _merge_sets(sets: List[List[str]]) -> List[List[str]]:
    return [_canonical_set(s) for s in sets]


class DatasetManifest(BaseModel):
    """Ordered collection of clips sharing one action vocabulary."""

    schema_version: str = MANIFEST_SCHEMA_VERSION
    vocabulary_ref: str
    entries: List[ManifestEntry] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_unique(self) -> "DatasetManifest":
        seen: Set[str] = set()
        for entry in self.entries:
            if entry.clip_id in seen:
                raise ValueError(f"duplicate clip_id in manifest: {entry.clip_id}")
            seen.add(entry.clip_id)
        return self

    def by_clip_id(self) -> Dict[str, ManifestEntry]:
        return {entry.clip_id: entry for entry in self.entries}

    def annotations(self, include_pseudo: bool = True) -> List[KeyframeAnnotation]:
        """Annotations in manifest order, optionally with pseudo-actions merged."""
        if include_pseudo:
            return [entry.training_annotation() for entry in self.entries]
        return [entry.annotation for entry in self.entries]
