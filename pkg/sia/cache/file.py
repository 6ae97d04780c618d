"""File-based embedding cache."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import List, Optional

from sia.cache.base import BaseCache
from sia.utils import atomic_write_text, sha1_short

logger = logging.getLogger(__name__)


class FileCache(BaseCache):
    """
    File-based cache that survives between runs.

    Cache structure:
        {cache_dir}/
            {key_hash}.json  →  {"key": original_key, "data": [floats]}
    """

    def __init__(self, cache_dir: str = ".cache/embeddings"):
        """
        Initialize file cache.

        Args:
            cache_dir: Directory to store cache files
        """
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)

    def _key_to_filename(self, key: str) -> Path:
        """Convert cache key to safe filename."""
        return self.cache_dir / f"{sha1_short(key, 32)}.json"

    def _read_cache_file(self, filepath: Path) -> Optional[dict]:
        try:
            if not filepath.exists():
                return None
            with open(filepath, "r", encoding="utf-8") as f:
                return json.load(f)
        except (json.JSONDecodeError, OSError):
            # Corrupted or unreadable file
            return None

    def get(self, key: str) -> Optional[List[float]]:
        entry = self._read_cache_file(self._key_to_filename(key))
        # Hash collisions fall back to a miss
        if entry is None or entry.get("key") != key:
            return None
        return entry.get("data")

    def set(self, key: str, value: List[float]) -> None:
        entry = {"key": key, "data": [float(v) for v in value]}
        try:
            atomic_write_text(self._key_to_filename(key), json.dumps(entry))
        except OSError as e:
            logger.warning(f"Could not write embedding cache entry: {e}")

    def delete(self, key: str) -> None:
        try:
            self._key_to_filename(key).unlink()
        except OSError:
            pass

    def clear(self) -> None:
        for filepath in self.cache_dir.glob("*.json"):
            try:
                filepath.unlink()
            except OSError:
                pass

    def get_stats(self) -> dict:
        """
        Get cache statistics.

        Returns:
            Dict with file count and total size
        """
        stats = {"total_files": 0, "total_size_bytes": 0}
        for filepath in self.cache_dir.glob("*.json"):
            stats["total_files"] += 1
            stats["total_size_bytes"] += filepath.stat().st_size
        return stats
