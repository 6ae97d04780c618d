"""Base cache interface for text embeddings."""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import List, Optional


class BaseCache(ABC):
    """
    Abstract base class for embedding caches.

    Entries are unit-norm text embeddings stored as plain float lists, keyed
    by (text-encoder weights version, text). Entries never expire: a change of
    encoder weights changes the version and therefore the key.
    """

    @abstractmethod
    def get(self, key: str) -> Optional[List[float]]:
        """
        Get an embedding from cache.

        Args:
            key: Cache key

        Returns:
            Cached embedding or None if not found
        """
        pass

    @abstractmethod
    def set(self, key: str, value: List[float]) -> None:
        """
        Store an embedding.

        Args:
            key: Cache key
            value: Embedding to cache
        """
        pass

    @abstractmethod
    def delete(self, key: str) -> None:
        """Delete a key from cache."""
        pass

    @abstractmethod
    def clear(self) -> None:
        """Clear all cached values."""
        pass

    def make_key(self, *parts: str) -> str:
        """Create a cache key from parts."""
        return ":".join(str(p) for p in parts)

    def embedding_key(self, encoder_version: str, text: str) -> str:
        return self.make_key("text", encoder_version, text)
