"""In-process frame store for synthetic clips."""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from sia.models.annotations import FrameLocator
from sia.sources.base import BaseFrameSource, register_source


class MemoryFrameStore:
    """Process-wide mapping from key to ``[T, H, W, 3]`` frame arrays."""

    _frames: Dict[str, np.ndarray] = {}
    _lock = threading.Lock()

    @classmethod
    def put(cls, key: str, frames: np.ndarray) -> FrameLocator:
        with cls._lock:
            cls._frames[key] = np.asarray(frames, dtype=np.float32)
        return FrameLocator(kind="memory", path=key)

    @classmethod
    def get(cls, key: str) -> np.ndarray:
        with cls._lock:
            if key not in cls._frames:
                raise OSError(f"no in-memory frames for {key!r}")
            return cls._frames[key]

    @classmethod
    def keys(cls) -> List[str]:
        with cls._lock:
            return sorted(cls._frames)

    @classmethod
    def evict(cls, keys: Iterable[str]) -> int:
        """Drop the given keys; unknown keys are ignored. Returns how many were dropped."""
        with cls._lock:
            dropped = [k for k in keys if cls._frames.pop(k, None) is not None]
        return len(dropped)

    @classmethod
    def clear(cls) -> None:
        with cls._lock:
            cls._frames.clear()


@register_source("memory")
class MemoryFrameSource(BaseFrameSource):
    def __init__(self, locator: FrameLocator, root: Optional[Path] = None):
        super().__init__(locator, root)
        self._frames = MemoryFrameStore.get(locator.path)

    @property
    def num_frames(self) -> int:
        return self._frames.shape[0]

    @property
    def frame_shape(self) -> Tuple[int, int]:
        return self._frames.shape[1], self._frames.shape[2]

    def read(self, indices: Sequence[int]) -> np.ndarray:
        return self._frames[list(indices)].copy()
