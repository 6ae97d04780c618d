"""Raw float32 frame files: a (T, H, W) little-endian header then pixel data."""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from sia.config.settings import get_settings
from sia.models.annotations import FrameLocator
from sia.sources.base import BaseFrameSource, register_source
from sia.utils import atomic_write_bytes

_HEADER = struct.Struct("<III")
_DTYPE = np.dtype("<f4")


def write_raw_frames(path: Union[str, Path], frames: np.ndarray) -> None:
    """
    Persist a ``[T, H, W, 3]`` frame array.

    Args:
        path: Destination file
        frames: Frames with values in [0, 1]
    """
    if frames.ndim != 4 or frames.shape[-1] != 3:
        raise ValueError(f"expected [T, H, W, 3] frames, got shape {frames.shape}")
    t, h, w, _ = frames.shape
    body = np.ascontiguousarray(frames, dtype=_DTYPE).tobytes()
    atomic_write_bytes(path, _HEADER.pack(t, h, w) + body)


def read_raw_header(path: Union[str, Path]) -> Tuple[int, int, int]:
    with open(path, "rb") as f:
        head = f.read(_HEADER.size)
    if len(head) != _HEADER.size:
        raise OSError(f"truncated frame file header: {path}")
    return _HEADER.unpack(head)


@register_source("raw")
class RawFrameSource(BaseFrameSource):
    """Frames stored in one raw float32 file; relative paths honour SIA_DATA_DIR."""

    def __init__(self, locator: FrameLocator, root: Optional[Path] = None):
        super().__init__(locator, root)
        self.path = get_settings().resolve_path(locator.path, root)
        self._t, self._h, self._w = read_raw_header(self.path)
        self._frames = None

    @property
    def num_frames(self) -> int:
        return self._t

    @property
    def frame_shape(self) -> Tuple[int, int]:
        return (self._h, self._w)

    def _load(self) -> np.ndarray:
        if self._frames is None:
            count = self._t * self._h * self._w * 3
            data = np.fromfile(self.path, dtype=_DTYPE, count=count, offset=_HEADER.size)
            if data.size != count:
                raise OSError(
                    f"frame file {self.path} holds {data.size} values, expected {count}"
                )
            self._frames = data.reshape(self._t, self._h, self._w, 3)
        return self._frames

    def read(self, indices: Sequence[int]) -> np.ndarray:
        frames = self._load()
        return np.asarray(frames[list(indices)], dtype=np.float32)

    def close(self) -> None:
        self._frames = None
