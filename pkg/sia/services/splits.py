"""Base/novel class splits for zero-shot evaluation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Set

import numpy as np

from sia.models.annotations import DatasetManifest, ManifestEntry
from sia.models.vocabulary import ActionVocabulary


@dataclass
class ClassSplit:
    base_classes: List[str]
    novel_classes: List[str]
    base: DatasetManifest
    novel: DatasetManifest


def _restrict(entry: ManifestEntry, keep: Set[str], vocab: ActionVocabulary) -> Optional[ManifestEntry]:
    """
    Keep only labels of ``keep``; ``None`` when no box keeps one.

    Every box stays: a box whose labels all belong to the other side becomes
    an actor with an empty action set.
    """
    ann = entry.annotation
    sets = [[a for a in s if vocab.canonical_name(a) in keep] for s in ann.action_sets]
    pseudo = None
    if entry.pseudo_actions is not None:
        pseudo = [[a for a in p if vocab.canonical_name(a) in keep] for p in entry.pseudo_actions]
    if not any(sets):
        return None
    glob = ann.global_action
    if glob is not None and vocab.canonical_name(glob) not in keep:
        glob = None
    annotation = ann.model_copy(update={"action_sets": sets, "global_action": glob})
    provenance = entry.provenance if pseudo and any(pseudo) else None
    return entry.model_copy(update={"annotation": annotation, "pseudo_actions": pseudo, "provenance": provenance})


def split_base_novel(
    manifest: DatasetManifest,
    vocab: ActionVocabulary,
    ratio: float = 0.75,
    seed: int = 0,
) -> ClassSplit:
    """
    Split classes into base and novel by a seeded shuffle.

    ``round(ratio * C)`` classes (at least one, at most ``C - 1``) become
    base. A clip joins the base manifest when any box keeps a base label and
    the novel manifest when any box keeps a novel label. Each side sees only
    its own labels but keeps every box, so actors of the other side still
    count as actors.

    Raises:
        ValueError: ``ratio`` outside (0, 1) or fewer than two classes
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must lie strictly between 0 and 1, got {ratio}")
    n_classes = len(vocab)
    if n_classes < 2:
        raise ValueError("a base/novel split needs at least two classes")

    n_base = min(max(int(math.floor(ratio * n_classes + 0.5)), 1), n_classes - 1)
    order = np.random.default_rng(seed).permutation(n_classes)
    base_ids = set(int(i) for i in order[:n_base])
    base_classes = [c.name for c in vocab.classes if c.id in base_ids]
    novel_classes = [c.name for c in vocab.classes if c.id not in base_ids]

    base_entries, novel_entries = [], []
    for entry in manifest.entries:
        kept = _restrict(entry, set(base_classes), vocab)
        if kept is not None:
            base_entries.append(kept)
        kept = _restrict(entry, set(novel_classes), vocab)
        if kept is not None:
            novel_entries.append(kept)

    return ClassSplit(
        base_classes=base_classes,
        novel_classes=novel_classes,
        base=manifest.model_copy(update={"entries": base_entries}),
        novel=manifest.model_copy(update={"entries": novel_entries}),
    )
