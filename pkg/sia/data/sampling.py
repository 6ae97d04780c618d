"""Fixed-length clip sampling around an annotated keyframe."""

from __future__ import annotations

from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from sia.data.clip import Clip
from sia.models.annotations import FrameLocator
from sia.sources.base import BaseFrameSource, open_source


def clip_frame_indices(keyframe: int, num_frames: int, T: int, stride: int) -> List[int]:
    """
    Source indices of a T-frame clip centred on ``keyframe``.

    Position ``T // 2`` holds the keyframe; neighbours sit ``stride`` apart.
    Indices beyond the source are clamped, which repeats the boundary frame.
    """
    if T < 1 or stride < 1:
        raise ValueError(f"need T >= 1 and stride >= 1, got T={T}, stride={stride}")
    center = T // 2
    offsets = (np.arange(T) - center) * stride
    return np.clip(keyframe + offsets, 0, num_frames - 1).astype(int).tolist()


def sample_clip_frames(
    source: Union[FrameLocator, BaseFrameSource],
    T: int = 8,
    stride: int = 4,
    root: Optional[Path] = None,
    clip_id: Optional[str] = None,
) -> Clip:
    """
    Read a T-frame clip around the locator's keyframe.

    Args:
        source: Frame locator or an already opened source
        T: Frames per clip
        stride: Source frames between consecutive clip frames; a stride on the
            locator takes precedence
        root: Directory relative locator paths resolve against
        clip_id: Carried into the returned clip

    Returns:
        Clip with ``keyframe_index == T // 2``

    Raises:
        OSError: Unreadable source
    """
    opened = source if isinstance(source, BaseFrameSource) else open_source(source, root)
    try:
        n = opened.num_frames
        if n < 1:
            raise OSError(f"frame source {opened.locator.path} is empty")
        keyframe = opened.locator.keyframe
        if keyframe is None:
            keyframe = n // 2
        if keyframe >= n:
            raise OSError(f"keyframe {keyframe} beyond {n} frames in {opened.locator.path}")
        if opened.locator.stride is not None:
            stride = opened.locator.stride
        frames = opened.read(clip_frame_indices(keyframe, n, T, stride))
    finally:
        if opened is not source:
            opened.close()
    return Clip(frames=frames, keyframe_index=T // 2, clip_id=clip_id)
