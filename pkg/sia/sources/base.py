"""Base frame source class and registry for sia."""

from __future__ import annotations

from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Type

import numpy as np

from sia.models.annotations import FrameLocator


class BaseFrameSource(ABC):
    """
    Abstract base class for all frame sources.

    A frame source exposes the frames of one video (or pre-extracted clip) as
    ``[H, W, 3]`` float32 arrays with values in [0, 1]. Sources are opened
    per consumer; instances are not shared between threads.

    To create a new source:
    1. Subclass BaseFrameSource
    2. Implement ``num_frames``, ``frame_shape`` and ``read()``
    3. Use the ``@register_source`` decorator so locators of that kind resolve

    Example:
        ```python
        @register_source("npy")
        class NpyFrameSource(BaseFrameSource):
            def __init__(self, locator, root=None):
                super().__init__(locator, root)
                self._frames = np.load(locator.path, mmap_mode="r")

            @property
            def num_frames(self):
                return self._frames.shape[0]

            @property
            def frame_shape(self):
                return self._frames.shape[1:3]

            def read(self, indices):
                return np.asarray(self._frames[list(indices)], dtype=np.float32)
        ```
    """

    name: str = "base"

    def __init__(self, locator: FrameLocator, root: Optional[Path] = None):
        self.locator = locator
        self.root = root

    @property
    @abstractmethod
    def num_frames(self) -> int:
        """Number of frames available."""
        pass

    @property
    @abstractmethod
    def frame_shape(self) -> Tuple[int, int]:
        """Frame (height, width)."""
        pass

    @abstractmethod
    def read(self, indices: Sequence[int]) -> np.ndarray:
        """
        Read frames by index.

        Args:
            indices: Frame indices, each in ``[0, num_frames)``

        Returns:
            ``[len(indices), H, W, 3]`` float32 array
        """
        pass

    def close(self) -> None:
        """Release resources. Override if needed."""
        pass

    def __enter__(self) -> "BaseFrameSource":
        return self

    def __exit__(self, *exc: Any) -> None:
        self.close()


class SourceRegistry:
    """Registry mapping locator kinds to frame source classes."""

    _sources: Dict[str, Type[BaseFrameSource]] = {}

    @classmethod
    def register(cls, name: str, source_class: Type[BaseFrameSource]) -> None:
        """Register a source class."""
        cls._sources[name] = source_class

    @classmethod
    def get(cls, name: str) -> Optional[Type[BaseFrameSource]]:
        """Get a source class by name."""
        return cls._sources.get(name)

    @classmethod
    def list_sources(cls) -> List[str]:
        """List all registered source names."""
        return list(cls._sources.keys())

    @classmethod
    def create(cls, locator: FrameLocator, root: Optional[Path] = None) -> BaseFrameSource:
        """Open a source for a locator; relative paths resolve against ``root``."""
        source_class = cls._sources.get(locator.kind)
        if source_class is None:
            raise OSError(
                f"no frame source registered for kind {locator.kind!r} "
                f"(available: {cls.list_sources()})"
            )
        return source_class(locator, root)


def register_source(name: str):
    """
    Decorator to register a frame source class.

    Usage:
        @register_source("raw")
        class RawFrameSource(BaseFrameSource):
            ...
    """
    def decorator(cls: Type[BaseFrameSource]) -> Type[BaseFrameSource]:
        cls.name = name
        SourceRegistry.register(name, cls)
        return cls
    return decorator


def open_source(locator: FrameLocator, root: Optional[Path] = None) -> BaseFrameSource:
    """Open the frame source a locator points at."""
    return SourceRegistry.create(locator, root)
