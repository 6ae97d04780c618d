"""Cache factory for sia."""

from __future__ import annotations

from typing import TYPE_CHECKING, Optional

from sia.cache.base import BaseCache
from sia.cache.file import FileCache
from sia.cache.memory import InMemoryCache

if TYPE_CHECKING:
    from sia.config.settings import CacheConfig


# Global cache instance (singleton)
_cache_instance: Optional[BaseCache] = None


def get_cache(
    cache_type: Optional[str] = None,
    config: Optional["CacheConfig"] = None,
) -> BaseCache:
    """
    Get or create the process-wide embedding cache.

    Args:
        cache_type: "memory" | "file" (overrides config)
        config: CacheConfig from settings

    Returns:
        Cache instance
    """
    global _cache_instance

    if _cache_instance is not None:
        return _cache_instance

    if cache_type is None:
        cache_type = config.type if config is not None else "memory"
    cache_dir = config.directory if config is not None else ".cache/embeddings"

    _cache_instance = create_cache(cache_type, cache_dir=cache_dir)
    return _cache_instance


def reset_cache() -> None:
    """Reset the cache singleton (useful for testing)."""
    global _cache_instance
    _cache_instance = None


def create_cache(cache_type: str = "memory", cache_dir: str = ".cache/embeddings") -> BaseCache:
    """
    Create a new cache instance (non-singleton).

    Args:
        cache_type: "memory" | "file"
        cache_dir: Directory for the file cache

    Returns:
        New cache instance
    """
    if cache_type == "file":
        return FileCache(cache_dir=cache_dir)
    if cache_type == "memory":
        return InMemoryCache()
    raise ValueError(f"unknown cache type: {cache_type!r}")
