"""
AVA-style keyframe CSV.

Rows are ``video_id,timestamp,x1,y1,x2,y2,action_id,person_id`` with
coordinates as fractions of the frame. Rows sharing (video_id, timestamp)
form one keyframe annotation; rows that also share a non-empty person_id are
one box with a multi-label action set.
"""

from __future__ import annotations

import csv
import io
import logging
from typing import Dict, Iterable, List, Optional, Tuple, Union

from sia.errors import DataValidationError, ParseError
from sia.models.annotations import KeyframeAnnotation
from sia.models.boxes import BoxXYXY

logger = logging.getLogger(__name__)

AVA_FIELDS = 8


def ava_clip_id(video_id: str, timestamp: str) -> str:
    return f"{video_id}_{timestamp}"


def _parse_coords(fields: List[str], line: int) -> Tuple[float, float, float, float]:
    try:
        x1, y1, x2, y2 = (float(v) for v in fields)
    except ValueError:
        raise ParseError(f"non-numeric box coordinate in {fields}", line) from None
    for v in (x1, y1, x2, y2):
        if not 0.0 <= v <= 1.0:
            raise DataValidationError(f"line {line}: coordinate {v} outside [0, 1]")
    if x1 > x2 or y1 > y2:
        raise DataValidationError(f"line {line}: box corners out of order")
    return x1, y1, x2, y2


class _KeyframeBuilder:
    def __init__(self, video_id: str, timestamp: str):
        self.video_id = video_id
        self.timestamp = timestamp
        self.boxes: List[Tuple[float, float, float, float]] = []
        self.actions: List[List[str]] = []
        self.person_ids: List[Optional[str]] = []
        self._by_person: Dict[str, int] = {}

    def add(self, coords, action: str, person_id: Optional[str], line: int) -> None:
        if person_id:
            idx = self._by_person.get(person_id)
            if idx is not None:
                if self.boxes[idx] != coords:
                    raise DataValidationError(
                        f"line {line}: person {person_id} has two different boxes "
                        f"on {self.video_id}@{self.timestamp}"
                    )
                self.actions[idx].append(action)
                return
            self._by_person[person_id] = len(self.boxes)
        self.boxes.append(coords)
        self.actions.append([action])
        self.person_ids.append(person_id or None)

    def build(self) -> KeyframeAnnotation:
        return KeyframeAnnotation(
            clip_id=ava_clip_id(self.video_id, self.timestamp),
            boxes=[BoxXYXY.from_sequence(b) for b in self.boxes],
            action_sets=self.actions,
            video_id=self.video_id,
            timestamp=self.timestamp,
            person_ids=self.person_ids,
        )


def parse_ava_csv(text: Union[str, Iterable[str]]) -> List[KeyframeAnnotation]:
    """
    Parse AVA-style CSV rows into keyframe annotations.

    Args:
        text: Whole document or an iterable of lines

    Returns:
        One annotation per (video_id, timestamp), in first-appearance order

    Raises:
        ParseError: Row without exactly 8 fields or with non-numeric coordinates
        DataValidationError: Coordinate outside [0, 1]
    """
    stream = io.StringIO(text) if isinstance(text, str) else text
    builders: Dict[Tuple[str, str], _KeyframeBuilder] = {}

    for line, row in enumerate(csv.reader(stream), start=1):
        if not row or all(not field.strip() for field in row):
            continue
        if len(row) != AVA_FIELDS:
            raise ParseError(f"expected {AVA_FIELDS} fields, got {len(row)}", line)
        video_id, timestamp = row[0].strip(), row[1].strip()
        if not video_id or not timestamp:
            raise ParseError("empty video_id or timestamp", line)
        coords = _parse_coords([f.strip() for f in row[2:6]], line)
        action = row[6].strip()
        if not action:
            raise ParseError("empty action_id", line)
        person_id = row[7].strip() or None

        key = (video_id, timestamp)
        if key not in builders:
            builders[key] = _KeyframeBuilder(video_id, timestamp)
        builders[key].add(coords, action, person_id, line)

    annotations = [b.build() for b in builders.values()]
    logger.debug(f"Parsed {len(annotations)} AVA keyframes")
    return annotations


def _fmt(value: float) -> str:
    # repr is the shortest string that parses back to the same float
    return repr(float(value))


def serialize_ava_csv(annotations: Iterable[KeyframeAnnotation]) -> str:
    """
    Write annotations back to AVA CSV rows.

    Multi-label boxes become one row per action in sorted order. Annotations
    without ``video_id``/``timestamp`` fall back to the clip id and ``0``.
    Boxes with an empty action set have no row and are dropped.
    """
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    for ann in annotations:
        video_id = ann.video_id or ann.clip_id
        timestamp = ann.timestamp or "0"
        person_ids = ann.person_ids or [str(i) for i in range(ann.num_boxes)]
        for box, actions, person in zip(ann.boxes, ann.action_sets, person_ids):
            if not actions:
                logger.debug(f"{ann.clip_id}: box without actions not serialized")
            for action in actions:
                writer.writerow(
                    [video_id, timestamp, *(_fmt(v) for v in box.as_tuple()), action, person or ""]
                )
    return out.getvalue()


def parse_global_sidecar(text: Union[str, Iterable[str]]) -> Dict[str, str]:
    """
    Parse a ``clip_id,global_action_name`` sidecar for Kinetics-style clips.

    Raises:
        ParseError: Wrong field count or conflicting entries for one clip
    """
    stream = io.StringIO(text) if isinstance(text, str) else text
    mapping: Dict[str, str] = {}
    for line, row in enumerate(csv.reader(stream), start=1):
        if not row or all(not field.strip() for field in row):
            continue
        if len(row) != 2:
            raise ParseError(f"expected 2 fields, got {len(row)}", line)
        clip_id, action = row[0].strip(), row[1].strip()
        if not clip_id or not action:
            raise ParseError("empty clip_id or global action", line)
        if mapping.get(clip_id, action) != action:
            raise ParseError(f"conflicting global actions for {clip_id}", line)
        mapping[clip_id] = action
    return mapping


def attach_global_actions(
    annotations: Iterable[KeyframeAnnotation],
    sidecar: Dict[str, str],
) -> List[KeyframeAnnotation]:
    """Set ``global_action`` on every annotation named in the sidecar."""
    out = []
    for ann in annotations:
        action = sidecar.get(ann.clip_id)
        if action is None:
            out.append(ann)
        else:
            out.append(ann.model_copy(update={"global_action": action}))
    return out
