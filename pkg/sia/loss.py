"""Set-prediction training objective: actor, box and action terms."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Sequence, Union

import torch
import torch.nn.functional as F

from sia.detector.detector import ACTOR, BACKGROUND, DetectorOutput
from sia.errors import ContractViolationError
from sia.geometry import box_cxcywh_to_xyxy, box_xyxy_to_cxcywh, boxes_to_tensor, elementwise_giou
from sia.models.annotations import KeyframeAnnotation
from sia.models.config import LossWeights
from sia.models.detection import Assignment


@dataclass
class LossBreakdown:
    """Loss terms as tensors; ``total`` is the weighted sum."""

    actor_term: torch.Tensor
    box_term: torch.Tensor
    action_term: torch.Tensor
    total: torch.Tensor

    def to_floats(self) -> Dict[str, float]:
        return {
            "actor": float(self.actor_term.detach()),
            "box": float(self.box_term.detach()),
            "action": float(self.action_term.detach()),
            "total": float(self.total.detach()),
        }


def class_logits(
    output: DetectorOutput,
    text_embeddings: torch.Tensor,
    logit_scale: Union[float, torch.Tensor],
) -> torch.Tensor:
    """Scaled cosine similarities ``[..., N, C]`` against ``[C, d]`` text embeddings."""
    return logit_scale * output.embeddings @ text_embeddings.to(output.embeddings.dtype).T


def _check_assignment(assignment: Assignment, n: int, m: int) -> None:
    rows = assignment.prediction_indices
    cols = assignment.target_indices
    if any(not 0 <= i < n for i in rows) or any(not 0 <= j < m for j in cols):
        raise ContractViolationError(
            f"assignment {assignment.pairs} out of range for {n} predictions and {m} boxes"
        )
    if len(set(rows)) != len(rows) or len(set(cols)) != len(cols):
        raise ContractViolationError(f"assignment {assignment.pairs} is not injective")


def compute_loss(
    output: DetectorOutput,
    logits: torch.Tensor,
    gt: KeyframeAnnotation,
    assignment: Assignment,
    weights: LossWeights,
    class_names: Sequence[str],
) -> LossBreakdown:
    """
    Loss of one clip.

    Args:
        output: Single-clip detector output (``[N, ...]`` tensors)
        logits: ``[N, C]`` raw per-class logits, ``logit_scale * S``
        gt: Keyframe annotation
        assignment: Matching of ``output`` against ``gt``
        weights: Term weights and background down-weighting
        class_names: Class of each logit column; these are the negatives

    Returns:
        LossBreakdown whose total is ``la * actor + lb * box + lc * action``

    Raises:
        ContractViolationError: Assignment indices out of range, or a matched
            box label without a logit column
    """
    n = output.num_outputs
    m = gt.num_boxes
    _check_assignment(assignment, n, m)
    rows = torch.as_tensor(assignment.prediction_indices, dtype=torch.long, device=output.boxes.device)
    cols = assignment.target_indices

    # Actor: every prediction, background down-weighted, averaged over predictions
    targets = torch.full((n,), BACKGROUND, dtype=torch.long, device=output.boxes.device)
    targets[rows] = ACTOR
    per_token = F.cross_entropy(output.actor_logits, targets, reduction="none")
    token_weights = torch.full_like(per_token, weights.background_weight)
    token_weights[rows] = 1.0
    actor = (token_weights * per_token).sum() / n

    zero = output.boxes.new_zeros(())
    if not assignment.pairs:
        box = zero
        action = zero
    else:
        gt_xyxy = boxes_to_tensor([gt.boxes[j] for j in cols], dtype=output.boxes.dtype).to(
            output.boxes.device
        )
        src = output.boxes[rows]
        l1 = (src - box_xyxy_to_cxcywh(gt_xyxy)).abs().sum(dim=-1)
        giou = elementwise_giou(box_cxcywh_to_xyxy(src), gt_xyxy)
        box = (l1 + (1.0 - giou)).mean()

        if logits.shape[-1] == 0:
            action = zero
        else:
            column = {name: c for c, name in enumerate(class_names)}
            action_targets = torch.zeros(
                (len(cols), logits.shape[-1]), dtype=logits.dtype, device=logits.device
            )
            for k, j in enumerate(cols):
                for label in gt.action_sets[j]:
                    if label not in column:
                        raise ContractViolationError(
                            f"{gt.clip_id}: label {label!r} has no logit column"
                        )
                    action_targets[k, column[label]] = 1.0
            action = F.binary_cross_entropy_with_logits(logits[rows], action_targets)

    total = weights.lambda_actor * actor + weights.lambda_box * box + weights.lambda_action * action
    return LossBreakdown(actor_term=actor, box_term=box, action_term=action, total=total)


def batch_loss(parts: List[LossBreakdown]) -> LossBreakdown:
    """Mean of per-clip breakdowns."""
    if not parts:
        raise ValueError("batch_loss needs at least one clip")
    return LossBreakdown(
        actor_term=torch.stack([p.actor_term for p in parts]).mean(),
        box_term=torch.stack([p.box_term for p in parts]).mean(),
        action_term=torch.stack([p.action_term for p in parts]).mean(),
        total=torch.stack([p.total for p in parts]).mean(),
    )
