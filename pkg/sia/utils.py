"""Utility functions for sia."""

from __future__ import annotations

import hashlib
import os
import re
import tempfile
from pathlib import Path
from typing import Union


def slugify(s: str, max_length: int = 80) -> str:
    """
    Convert string to a safe slug.

    Args:
        s: Input string
        max_length: Maximum length of output

    Returns:
        Slugified string
    """
    s = s.strip().lower()
    s = re.sub(r"[^a-z0-9]+", "-", s)
    return s.strip("-")[:max_length] or "output"


def sha1_short(s: Union[str, bytes], length: int = 12) -> str:
    """
    Generate a short SHA1 hash of a string.

    Args:
        s: Input string or bytes
        length: Length of output hash

    Returns:
        Truncated SHA1 hash
    """
    data = s.encode("utf-8") if isinstance(s, str) else s
    return hashlib.sha1(data).hexdigest()[:length]


def atomic_write_bytes(path: Union[str, Path], data: bytes) -> None:
    """Write a file via temp-then-rename so readers never see partial content."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, temp_path = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(temp_path, path)
    except Exception:
        if os.path.exists(temp_path):
            os.unlink(temp_path)
        raise


def atomic_write_text(path: Union[str, Path], text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))
