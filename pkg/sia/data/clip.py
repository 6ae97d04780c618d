"""In-memory clip representation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from sia.errors import DataValidationError


@dataclass
class Clip:
    """
    A fixed-length frame sequence with a designated keyframe.

    Attributes:
        frames: ``[T, H, W, 3]`` float32 array with values in [0, 1]
        keyframe_index: Index of the annotated frame, ``T // 2`` by default
        clip_id: Optional identifier carried for logging
    """

    frames: np.ndarray
    keyframe_index: Optional[int] = None
    clip_id: Optional[str] = None

    def __post_init__(self) -> None:
        if self.frames.ndim != 4 or self.frames.shape[-1] != 3:
            raise DataValidationError(
                f"clip frames must be [T, H, W, 3], got {self.frames.shape}"
            )
        if self.frames.shape[0] < 1:
            raise DataValidationError("clip needs at least one frame")
        if self.keyframe_index is None:
            self.keyframe_index = self.num_frames // 2
        if not 0 <= self.keyframe_index < self.num_frames:
            raise DataValidationError(
                f"keyframe_index {self.keyframe_index} outside [0, {self.num_frames})"
            )

    @property
    def num_frames(self) -> int:
        return int(self.frames.shape[0])

    @property
    def height(self) -> int:
        return int(self.frames.shape[1])

    @property
    def width(self) -> int:
        return int(self.frames.shape[2])

    @property
    def keyframe(self) -> np.ndarray:
        return self.frames[self.keyframe_index]
