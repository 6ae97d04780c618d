"""Frame sources for sia."""

from sia.sources.base import (
    BaseFrameSource,
    SourceRegistry,
    open_source,
    register_source,
)
from sia.sources.memory import MemoryFrameSource, MemoryFrameStore
from sia.sources.raw import RawFrameSource, read_raw_header, write_raw_frames

__all__ = [
    "BaseFrameSource",
    "MemoryFrameSource",
    "MemoryFrameStore",
    "RawFrameSource",
    "SourceRegistry",
    "open_source",
    "read_raw_header",
    "register_source",
    "write_raw_frames",
]
