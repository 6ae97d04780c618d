"""Detector outputs, detection records and evaluation reports."""

from __future__ import annotations

import math
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, field_validator

from sia.models.boxes import BoxCXCYWH, BoxXYXY


class DetectionTriplet(BaseModel):
    """Output of one detection token: box, actor probability, vision embedding."""

    box: BoxCXCYWH
    p_act: float = Field(ge=0.0, le=1.0)
    e_v: List[float]

    @field_validator("e_v")
    @classmethod
    def _unit_norm(cls, value: List[float]) -> List[float]:
        norm = math.sqrt(sum(v * v for v in value))
        if abs(norm - 1.0) > 1e-5:
            raise ValueError(f"e_v must be unit-norm, got norm {norm:.8f}")
        return value


class ScoredDetection(BaseModel):
    """A surviving detection token with one score per vocabulary class."""

    token_index: int
    box: BoxXYXY
    p_act: float
    scores: List[float]

    def top_classes(self, k: int) -> List[Tuple[int, float]]:
        ranked = sorted(enumerate(self.scores), key=lambda kv: (-kv[1], kv[0]))
        return ranked[:k]


class DetectionRecord(BaseModel):
    """One (box, class, score) row of a detection dump."""

    clip_id: str
    box: BoxXYXY
    class_id: int = Field(ge=0)
    score: float

    @field_validator("score")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("detection score must be finite")
        return value


class Assignment(BaseModel):
    """Injective prediction→ground-truth pairs with their summed cost."""

    pairs: List[Tuple[int, int]] = Field(default_factory=list)
    total_cost: float = 0.0

    @property
    def prediction_indices(self) -> List[int]:
        return [i for i, _ in self.pairs]

    @property
    def target_indices(self) -> List[int]:
        return [j for _, j in self.pairs]


class ClassResult(BaseModel):
    """AP of one class; ``ap`` is None when the class has no ground truth."""

    ap: Optional[float] = None
    gt_count: int = 0


class EvalReport(BaseModel):
    """Frame-level mAP report at one IoU threshold."""

    iou_threshold: float
    map: float
    per_class: Dict[str, ClassResult] = Field(default_factory=dict)

    @property
    def evaluated_classes(self) -> List[str]:
        return [name for name, r in self.per_class.items() if r.ap is not None]


class SplitReport(BaseModel):
    """Mean AP restricted to base and to novel classes."""

    iou_threshold: float
    base_map: Optional[float] = None
    novel_map: Optional[float] = None
    base_classes: List[str] = Field(default_factory=list)
    novel_classes: List[str] = Field(default_factory=list)


class BenchmarkReport(BaseModel):
    """One evaluation report per benchmark dataset, in suite order."""

    checkpoint_hash: Optional[str] = None
    iou_threshold: float
    datasets: Dict[str, EvalReport] = Field(default_factory=dict)

    def table(self) -> Dict[str, float]:
        """f-mAP column per dataset."""
        return {name: report.map for name, report in self.datasets.items()}
