"""Text-embedding caching for sia."""

from sia.cache.base import BaseCache
from sia.cache.factory import create_cache, get_cache, reset_cache
from sia.cache.file import FileCache
from sia.cache.memory import InMemoryCache

__all__ = [
    "BaseCache",
    "FileCache",
    "InMemoryCache",
    "create_cache",
    "get_cache",
    "reset_cache",
]
