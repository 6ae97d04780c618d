"""In-memory embedding cache."""

from __future__ import annotations

import threading
from typing import Dict, List, Optional

from sia.cache.base import BaseCache


class InMemoryCache(BaseCache):
    """
    Dict-backed cache shared by the threads of one process.

    Suitable for single evaluation runs and tests.
    """

    def __init__(self) -> None:
        self._cache: Dict[str, List[float]] = {}
        self._lock = threading.Lock()

    def get(self, key: str) -> Optional[List[float]]:
        with self._lock:
            return self._cache.get(key)

    def set(self, key: str, value: List[float]) -> None:
        with self._lock:
            self._cache[key] = list(value)

    def delete(self, key: str) -> None:
        with self._lock:
            self._cache.pop(key, None)

    def clear(self) -> None:
        with self._lock:
            self._cache.clear()

    def __len__(self) -> int:
        return len(self._cache)
