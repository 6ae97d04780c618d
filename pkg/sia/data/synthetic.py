"""
Synthetic clips: coloured rectangles moving over a noise background.

Each rectangle's action class is ``{color}_moving_{direction}``. With a
non-zero ``global_fraction`` some multi-actor clips also carry a clip-level
global action ``{color}_global`` that belongs to the single actor of that
colour, which gives assignment-based pseudolabelling a known answer.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from sia.errors import ConfigurationError
from sia.models.annotations import DatasetManifest, FrameLocator, KeyframeAnnotation, ManifestEntry
from sia.models.boxes import BoxXYXY
from sia.models.config import SynthConfig
from sia.models.vocabulary import ActionVocabulary
from sia.sources.memory import MemoryFrameStore
from sia.sources.raw import write_raw_frames
from sia.utils import atomic_write_text, sha1_short

logger = logging.getLogger(__name__)

PALETTE: Dict[str, Tuple[float, float, float]] = {
    "red": (1.0, 0.0, 0.0),
    "green": (0.0, 1.0, 0.0),
    "blue": (0.0, 0.0, 1.0),
    "yellow": (1.0, 1.0, 0.0),
    "cyan": (0.0, 1.0, 1.0),
    "magenta": (1.0, 0.0, 1.0),
    "white": (1.0, 1.0, 1.0),
}

DIRECTIONS: Dict[str, Tuple[int, int]] = {
    "left": (-1, 0),
    "right": (1, 0),
    "up": (0, -1),
    "down": (0, 1),
}

MAX_PLACEMENT_TRIES = 100


def local_action(color: str, direction: str) -> str:
    return f"{color}_moving_{direction}"


def global_action(color: str) -> str:
    return f"{color}_global"


def synthetic_vocabulary(config: SynthConfig) -> ActionVocabulary:
    """Local classes (colour-major) followed by global classes when enabled."""
    names = [local_action(c, d) for c in config.colors for d in config.directions]
    if config.global_fraction > 0:
        names += [global_action(c) for c in config.colors]
    return ActionVocabulary.from_names(names)


@dataclass
class SyntheticActor:
    color: str
    direction: str
    x: int
    y: int
    w: int
    h: int
    speed: int

    def position(self, t: int, keyframe: int) -> Tuple[int, int]:
        dx, dy = DIRECTIONS[self.direction]
        step = (t - keyframe) * self.speed
        return self.x + dx * step, self.y + dy * step

    def overlaps(self, other: "SyntheticActor", frames: int, keyframe: int) -> bool:
        # One pixel of clearance in every frame
        for t in range(frames):
            ax, ay = self.position(t, keyframe)
            bx, by = other.position(t, keyframe)
            if ax < bx + other.w + 1 and bx < ax + self.w + 1 and ay < by + other.h + 1 and by < ay + self.h + 1:
                return True
        return False

    def box(self, size: int) -> BoxXYXY:
        return BoxXYXY(
            x1=self.x / size,
            y1=self.y / size,
            x2=(self.x + self.w) / size,
            y2=(self.y + self.h) / size,
        )


@dataclass
class SyntheticDataset:
    """Generated manifest plus the frames it points at."""

    manifest: DatasetManifest
    vocabulary: ActionVocabulary
    clips: Dict[str, np.ndarray]
    actors: Dict[str, List[SyntheticActor]] = field(default_factory=dict)
    # Index of the box owning the clip's global action
    owners: Dict[str, int] = field(default_factory=dict)

    def save(self, out_dir: Union[str, Path]) -> Path:
        """
        Persist frames as raw float32 files next to a manifest.

        Writes ``frames/{clip_id}.raw``, ``manifest.json``, ``vocabulary.json``
        and ``owners.json``; returns the manifest path.
        """
        out = Path(out_dir)
        entries = []
        for entry in self.manifest.entries:
            rel = f"frames/{entry.clip_id}.raw"
            write_raw_frames(out / rel, self.clips[entry.clip_id])
            source = FrameLocator(kind="raw", path=rel, keyframe=entry.source.keyframe, stride=1)
            entries.append(entry.model_copy(update={"source": source}))
        manifest = self.manifest.model_copy(update={"entries": entries})
        manifest_path = out / "manifest.json"
        atomic_write_text(manifest_path, manifest.model_dump_json(indent=2, exclude_none=True) + "\n")
        atomic_write_text(out / "vocabulary.json", self.vocabulary.model_dump_json(indent=2, exclude_none=True) + "\n")
        atomic_write_text(out / "owners.json", json.dumps(self.owners, indent=2, sort_keys=True) + "\n")
        logger.info(f"Saved {len(entries)} synthetic clips to {out}")
        return manifest_path

    def release(self) -> int:
        """Evict this dataset's frames from the in-process store; its memory locators stop resolving."""
        keys = [e.source.path for e in self.manifest.entries if e.source.kind == "memory"]
        dropped = MemoryFrameStore.evict(keys)
        logger.debug(f"Released {dropped} synthetic clips from the frame store")
        return dropped


def _place_actor(
    rng: np.random.Generator,
    config: SynthConfig,
    color: Optional[str],
    placed: List[SyntheticActor],
) -> Optional[SyntheticActor]:
    size, frames = config.image_size, config.frames
    keyframe = frames // 2
    for _ in range(MAX_PLACEMENT_TRIES):
        c = color if color is not None else str(rng.choice(config.colors))
        direction = str(rng.choice(config.directions))
        w, h = (int(v) for v in rng.integers(config.min_size, config.max_size + 1, size=2))
        speed = int(rng.integers(config.speed[0], config.speed[1] + 1))
        dx, dy = DIRECTIONS[direction]
        # Keyframe position range that keeps every frame inside the image
        travel_before, travel_after = keyframe * speed, (frames - 1 - keyframe) * speed
        x_lo, x_hi, y_lo, y_hi = _bounds(size, w, h, dx, dy, travel_before, travel_after)
        if x_hi < x_lo or y_hi < y_lo:
            raise ConfigurationError(
                f"rectangles up to {config.max_size}px moving {config.speed[1]}px/frame "
                f"do not fit a {size}px frame over {frames} frames"
            )
        actor = SyntheticActor(
            color=c,
            direction=direction,
            x=int(rng.integers(x_lo, x_hi + 1)),
            y=int(rng.integers(y_lo, y_hi + 1)),
            w=w,
            h=h,
            speed=speed,
        )
        if not any(actor.overlaps(other, frames, keyframe) for other in placed):
            return actor
    return None


def _bounds(size: int, w: int, h: int, dx: int, dy: int, before: int, after: int):
    """Inclusive keyframe top-left ranges keeping the whole trajectory in frame."""

    def axis(extent: int, d: int) -> Tuple[int, int]:
        if d > 0:
            return before, size - extent - after
        if d < 0:
            return after, size - extent - before
        return 0, size - extent

    x_lo, x_hi = axis(w, dx)
    y_lo, y_hi = axis(h, dy)
    return x_lo, x_hi, y_lo, y_hi


def _render(
    rng: np.random.Generator, config: SynthConfig, actors: List[SyntheticActor]
) -> np.ndarray:
    size, frames = config.image_size, config.frames
    keyframe = frames // 2
    video = rng.uniform(0.0, config.noise, size=(frames, size, size, 3)).astype(np.float32)
    for actor in actors:
        color = np.asarray(PALETTE[actor.color], dtype=np.float32)
        for t in range(frames):
            x, y = actor.position(t, keyframe)
            video[t, y : y + actor.h, x : x + actor.w, :] = color
    return video


def generate_synthetic(seed: int, n_clips: int, config: Optional[SynthConfig] = None) -> SyntheticDataset:
    """
    Generate a deterministic synthetic dataset.

    Args:
        seed: Seed of the only random generator used
        n_clips: Number of clips, at least 1
        config: Generator settings

    Returns:
        Dataset whose manifest points at in-memory frame sources

    Raises:
        ConfigurationError: Unknown colour or rectangles that cannot fit
    """
    config = config or SynthConfig()
    if n_clips < 1:
        raise ValueError("n_clips must be at least 1")
    unknown = [c for c in config.colors if c not in PALETTE]
    if unknown:
        raise ConfigurationError(f"unsupported colors: {unknown} (known: {sorted(PALETTE)})")

    rng = np.random.default_rng(seed)
    vocab = synthetic_vocabulary(config)
    store_prefix = f"synth/{sha1_short(config.model_dump_json(), 8)}/{seed}"
    keyframe = config.frames // 2

    entries: List[ManifestEntry] = []
    clips: Dict[str, np.ndarray] = {}
    actors_by_clip: Dict[str, List[SyntheticActor]] = {}
    owners: Dict[str, int] = {}

    for i in range(n_clips):
        clip_id = f"synth{seed}_{i:05d}"
        is_global = config.global_fraction > 0 and rng.random() < config.global_fraction

        lo, hi = config.min_actors, config.max_actors
        colors: List[Optional[str]]
        if is_global:
            hi = min(hi, len(config.colors))
            lo = min(max(lo, 2), hi)
        n = int(rng.integers(lo, hi + 1))
        if is_global:
            colors = [str(c) for c in rng.permutation(config.colors)[:n]]
        else:
            colors = [None] * n

        actors: List[SyntheticActor] = []
        for color in colors:
            actor = _place_actor(rng, config, color, actors)
            if actor is None:
                logger.debug(f"{clip_id}: could not place actor {len(actors) + 1}")
                continue
            actors.append(actor)

        video = _render(rng, config, actors)
        annotation = KeyframeAnnotation(
            clip_id=clip_id,
            boxes=[a.box(config.image_size) for a in actors],
            action_sets=[[local_action(a.color, a.direction)] for a in actors],
        )
        if is_global:
            owner = int(rng.integers(len(actors)))
            owners[clip_id] = owner
            annotation = annotation.model_copy(
                update={"global_action": global_action(actors[owner].color)}
            )

        locator = MemoryFrameStore.put(f"{store_prefix}/{clip_id}", video)
        locator = locator.model_copy(update={"keyframe": keyframe, "stride": 1})
        entries.append(ManifestEntry(clip_id=clip_id, source=locator, annotation=annotation))
        clips[clip_id] = video
        actors_by_clip[clip_id] = actors

    manifest = DatasetManifest(vocabulary_ref="vocabulary.json", entries=entries)
    logger.debug(f"Generated {n_clips} synthetic clips (seed={seed}, {len(owners)} global)")
    return SyntheticDataset(
        manifest=manifest,
        vocabulary=vocab,
        clips=clips,
        actors=actors_by_clip,
        owners=owners,
    )
