"""Weak-supervision pseudolabel records."""

from __future__ import annotations

from typing import List, Literal, Optional

from pydantic import BaseModel, Field, field_validator


class PseudolabelRecord(BaseModel):
    """
    Outcome of expanding one clip's labels with its global action.

    ``pseudo_actions`` is parallel to ``original_actions``; a box that did not
    receive the global action has an empty list.
    """

    clip_id: str
    method: Literal["NWS", "AWS"]
    global_action: Optional[str] = None
    original_actions: List[List[str]] = Field(default_factory=list)
    pseudo_actions: List[List[str]] = Field(default_factory=list)

    # AWS only: averaged similarity per box (None for unmatched boxes)
    similarities: Optional[List[Optional[float]]] = None
    similarity: Optional[float] = None

    # AWS run settings; a resumed run only reuses records whose settings match
    checkpoint_hash: Optional[str] = None
    top_k: Optional[int] = None
    min_similarity: Optional[float] = None

    success: bool = True
    skipped: bool = False
    warning: Optional[str] = None
    error: Optional[str] = None

    @field_validator("similarity")
    @classmethod
    def _in_range(cls, value: Optional[float]) -> Optional[float]:
        if value is not None and not -1.0 - 1e-6 <= value <= 1.0 + 1e-6:
            raise ValueError(f"similarity out of [-1, 1]: {value}")
        return value

    @property
    def assigned_boxes(self) -> List[int]:
        return [i for i, extra in enumerate(self.pseudo_actions) if extra]
