"""Spatiotemporal tube annotations sliced into keyframe annotations."""

from __future__ import annotations

import json
import logging
from typing import Dict, List, Literal, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError, field_validator

from sia.errors import DataValidationError, ParseError
from sia.models.annotations import KeyframeAnnotation
from sia.models.boxes import BoxXYXY

logger = logging.getLogger(__name__)


class TubeFrame(BaseModel):
    index: int = Field(ge=0)
    box: Tuple[float, float, float, float]

    @field_validator("box")
    @classmethod
    def _valid_box(cls, value):
        BoxXYXY.from_sequence(value)
        return value


class Tube(BaseModel):
    """One actor tracked through a video, performing a single action."""

    action: str
    frames: List[TubeFrame]

    @property
    def span(self) -> Tuple[int, int]:
        return self.frames[0].index, self.frames[-1].index

    def box_at(self, index: int) -> Optional[BoxXYXY]:
        """Box at a frame index, linearly interpolated between annotated frames."""
        start, end = self.span
        if not start <= index <= end:
            return None
        indices = [f.index for f in self.frames]
        pos = int(np.searchsorted(indices, index))
        if indices[pos] == index:
            return BoxXYXY.from_sequence(self.frames[pos].box)
        left, right = self.frames[pos - 1], self.frames[pos]
        t = (index - left.index) / (right.index - left.index)
        x1, y1, x2, y2 = (
            min(max((1 - t) * a + t * b, 0.0), 1.0) for a, b in zip(left.box, right.box)
        )
        return BoxXYXY.from_sequence((x1, y1, max(x1, x2), max(y1, y2)))


class TubeDocument(BaseModel):
    version: str = "1"
    videos: Dict[str, List[Tube]] = Field(default_factory=dict)


def _load_document(doc: Union[str, Mapping]) -> TubeDocument:
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as e:
            raise ParseError(f"tube document is not valid JSON: {e.msg}", e.lineno) from None
    if not isinstance(doc, Mapping):
        raise DataValidationError("tube document must be a mapping")
    # Bare {video_id: [tubes]} documents are accepted too
    if not isinstance(doc.get("videos"), Mapping):
        doc = {"videos": doc}
    try:
        parsed = TubeDocument.model_validate(doc)
    except ValidationError as e:
        raise DataValidationError(f"invalid tube document: {e}") from None

    for video_id, tubes in parsed.videos.items():
        for n, tube in enumerate(tubes):
            if not tube.frames:
                raise DataValidationError(f"{video_id} tube {n} has no frames")
            indices = [f.index for f in tube.frames]
            if any(b <= a for a, b in zip(indices, indices[1:])):
                raise DataValidationError(
                    f"{video_id} tube {n} ({tube.action}): frame indices not strictly increasing"
                )
    return parsed


def _merged_ranges(tubes: Sequence[Tube]) -> List[Tuple[int, int]]:
    spans = sorted(t.span for t in tubes)
    merged: List[Tuple[int, int]] = []
    for start, end in spans:
        if merged and start <= merged[-1][1] + 1:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return merged


def select_keyframes(
    tubes: Sequence[Tube],
    mode: Literal["eval", "train"] = "eval",
    rng: Optional[np.random.Generator] = None,
) -> List[int]:
    """
    Keyframes to annotate for one video.

    ``eval`` uses every annotated frame; ``train`` draws one frame uniformly
    from each range of frames covered by at least one tube.
    """
    if mode == "eval":
        return sorted({f.index for t in tubes for f in t.frames})
    rng = rng if rng is not None else np.random.default_rng(0)
    return [int(rng.integers(start, end + 1)) for start, end in _merged_ranges(tubes)]


def slice_tubes(video_id: str, tubes: Sequence[Tube], keyframe: int) -> KeyframeAnnotation:
    boxes: List[BoxXYXY] = []
    actions: List[List[str]] = []
    for tube in tubes:
        box = tube.box_at(keyframe)
        if box is not None:
            boxes.append(box)
            actions.append([tube.action])
    return KeyframeAnnotation(
        clip_id=f"{video_id}_{keyframe}",
        boxes=boxes,
        action_sets=actions,
        video_id=video_id,
        timestamp=str(keyframe),
    )


def parse_tube_annotations(
    doc: Union[str, Mapping],
    keyframes: Optional[Mapping[str, Sequence[int]]] = None,
    mode: Literal["eval", "train"] = "eval",
    seed: int = 0,
) -> List[KeyframeAnnotation]:
    """
    Slice tubes into one keyframe annotation per sampled keyframe.

    Args:
        doc: Tube document (JSON text or parsed mapping)
        keyframes: Explicit keyframes per video; videos not listed fall back
            to ``mode`` selection
        mode: ``eval`` (every annotated frame) or ``train`` (one seeded draw
            per tube-bearing range)
        seed: Seed for ``train`` selection

    Returns:
        Annotations ordered by video then keyframe; each box carries its
        tube's action as a singleton set

    Raises:
        DataValidationError: Non-monotonic frame indices or malformed boxes
    """
    parsed = _load_document(doc)
    rng = np.random.default_rng(seed)
    annotations: List[KeyframeAnnotation] = []
    for video_id, tubes in parsed.videos.items():
        if keyframes is not None and video_id in keyframes:
            frames = list(keyframes[video_id])
        elif tubes:
            frames = select_keyframes(tubes, mode, rng)
        else:
            frames = []
        for keyframe in frames:
            annotations.append(slice_tubes(video_id, tubes, keyframe))
    logger.debug(f"Sliced {len(annotations)} keyframes from {len(parsed.videos)} videos")
    return annotations
