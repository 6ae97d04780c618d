"""Label filtering and vocabulary resolution for annotations."""

from __future__ import annotations

import logging
from typing import Iterable, List, Set

from sia.errors import UnknownClassError
from sia.models.annotations import KeyframeAnnotation
from sia.models.vocabulary import ActionVocabulary

logger = logging.getLogger(__name__)


def apply_blocklist(
    annotations: Iterable[KeyframeAnnotation],
    blocklist: Iterable[str],
) -> List[KeyframeAnnotation]:
    """
    Remove blocked action labels.

    Boxes whose labels are all blocked are dropped together with their person
    id; boxes that carried no label to begin with stay as unlabelled actors.
    A blocked global action is cleared.
    """
    blocked: Set[str] = set(blocklist)
    if not blocked:
        return list(annotations)

    out: List[KeyframeAnnotation] = []
    dropped = 0
    for ann in annotations:
        keep = [i for i, s in enumerate(ann.action_sets) if not s or set(s) - blocked]
        dropped += ann.num_boxes - len(keep)
        update = {
            "boxes": [ann.boxes[i] for i in keep],
            "action_sets": [[a for a in ann.action_sets[i] if a not in blocked] for i in keep],
            "person_ids": [ann.person_ids[i] for i in keep] if ann.person_ids is not None else None,
            "global_action": None if ann.global_action in blocked else ann.global_action,
        }
        out.append(KeyframeAnnotation.model_validate({**ann.model_dump(), **update}))
    if dropped:
        logger.info(f"Blocklist removed {dropped} boxes")
    return out


def canonicalize_labels(
    annotations: Iterable[KeyframeAnnotation],
    vocab: ActionVocabulary,
) -> List[KeyframeAnnotation]:
    """
    Rewrite every action identifier (name or external id) as its class name.

    Raises:
        UnknownClassError: Naming every label that does not resolve
    """
    annotations = list(annotations)
    unknown: Set[str] = set()
    for ann in annotations:
        labels = ann.labels()
        if ann.global_action is not None:
            labels.add(ann.global_action)
        unknown.update(label for label in labels if not vocab.contains(label))
    if unknown:
        raise UnknownClassError(f"labels not in vocabulary: {', '.join(sorted(unknown))}")

    out = []
    for ann in annotations:
        sets = [[vocab.canonical_name(a) for a in s] for s in ann.action_sets]
        glob = vocab.canonical_name(ann.global_action) if ann.global_action else None
        out.append(ann.model_copy(update={"action_sets": [sorted(set(s)) for s in sets], "global_action": glob}))
    return out
