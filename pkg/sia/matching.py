"""
Bipartite assignment between predicted detection tokens and ground-truth boxes.

Costs use only the actor probability and the box (L1 in cxcywh plus
``1 - GIoU``); action similarity never enters the matching.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np
import torch
from scipy.optimize import linear_sum_assignment

from sia.detector.detector import DetectorOutput
from sia.geometry import box_cxcywh_to_xyxy, box_xyxy_to_cxcywh, boxes_to_tensor, generalized_box_iou
from sia.models.annotations import KeyframeAnnotation
from sia.models.detection import Assignment, DetectionTriplet


@dataclass(frozen=True)
class CostMatrix:
    """Rows are predictions (N >= 1), columns ground truths (M >= 0); entries finite."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"cost matrix must be 2-D, got shape {values.shape}")
        if values.shape[0] < 1:
            raise ValueError("cost matrix needs at least one prediction row")
        if not np.all(np.isfinite(values)):
            raise ValueError("cost matrix entries must be finite")
        object.__setattr__(self, "values", values)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape

    def total(self, pairs: Sequence[Tuple[int, int]]) -> float:
        return math.fsum(self.values[i, j] for i, j in pairs)


def _optimum(values: np.ndarray) -> Tuple[List[Tuple[int, int]], float]:
    if values.shape[0] == 0 or values.shape[1] == 0:
        return [], 0.0
    rows, cols = linear_sum_assignment(values)
    pairs = sorted(zip(rows.tolist(), cols.tolist()))
    return pairs, math.fsum(values[i, j] for i, j in pairs)


def _is_unique(values: np.ndarray, pairs: List[Tuple[int, int]], opt: float, tol: float) -> bool:
    # Any other optimum avoids at least one of these pairs
    big = 2.0 * (float(np.abs(values).sum()) + 1.0)
    for i, j in pairs:
        blocked = values.copy()
        blocked[i, j] = big
        _, alt = _optimum(blocked)
        if alt <= opt + tol:
            return False
    return True


def _lexicographic(values: np.ndarray, opt: float, tol: float) -> List[Tuple[int, int]]:
    n, m = values.shape
    need = min(n, m)
    pairs: List[Tuple[int, int]] = []
    used: List[int] = []
    fixed = 0.0
    for i in range(n):
        if len(pairs) == need:
            break
        if n - i < need - len(pairs):
            break
        free = [j for j in range(m) if j not in used]
        for j in free:
            rest_cols = [c for c in free if c != j]
            rest_rows = list(range(i + 1, n))
            remaining = need - len(pairs) - 1
            if min(len(rest_rows), len(rest_cols)) < remaining:
                continue
            sub = values[np.ix_(rest_rows, rest_cols)] if remaining else np.zeros((0, 0))
            _, sub_opt = _optimum(sub)
            if fixed + values[i, j] + sub_opt <= opt + tol:
                pairs.append((i, j))
                used.append(j)
                fixed += values[i, j]
                break
    return pairs


def hungarian(cost: Union[CostMatrix, np.ndarray], canonical: bool = True) -> Assignment:
    """
    Minimum-cost injective assignment of size ``min(N, M)``.

    Args:
        cost: Cost matrix
        canonical: Break ties by returning the lexicographically smallest
            sorted pair list among all optima

    Returns:
        Assignment with pairs sorted by prediction index
    """
    matrix = cost if isinstance(cost, CostMatrix) else CostMatrix(np.asarray(cost))
    values = matrix.values
    pairs, opt = _optimum(values)
    if canonical and pairs:
        tol = 1e-9 * (1.0 + abs(opt))
        if not _is_unique(values, pairs, opt, tol):
            pairs = _lexicographic(values, opt, tol)
    return Assignment(pairs=pairs, total_cost=matrix.total(pairs))


def _gt_boxes(gt: Union[KeyframeAnnotation, torch.Tensor], dtype: torch.dtype) -> torch.Tensor:
    if isinstance(gt, KeyframeAnnotation):
        return boxes_to_tensor(gt.boxes, dtype=dtype)
    return gt.to(dtype)


@torch.no_grad()
def match_cost_tensor(
    output: DetectorOutput,
    gt_xyxy: torch.Tensor,
    lambda_actor: float = 2.0,
    lambda_box: float = 2.0,
) -> torch.Tensor:
    """``[N, M]`` matching cost of one clip's output against ``[M, 4]`` xyxy boxes."""
    pred = output.boxes.double()
    gt_xyxy = gt_xyxy.double()
    n = pred.shape[0]
    if gt_xyxy.shape[0] == 0:
        return pred.new_zeros((n, 0))
    p_act = output.p_act.double()
    l1 = torch.cdist(pred, box_xyxy_to_cxcywh(gt_xyxy), p=1)
    giou = generalized_box_iou(box_cxcywh_to_xyxy(pred), gt_xyxy)
    return lambda_actor * (-p_act[:, None]) + lambda_box * (l1 + (1.0 - giou))


def build_match_cost(
    triplets: Union[DetectorOutput, Sequence[DetectionTriplet]],
    gt: Union[KeyframeAnnotation, torch.Tensor],
    lambda_actor: float = 2.0,
    lambda_box: float = 2.0,
) -> CostMatrix:
    """
    Entry ``(i, j) = -lambda_actor * p_act_i + lambda_box * (L1 + 1 - GIoU)``.

    Args:
        triplets: Single-clip detector output or triplet list (non-empty)
        gt: Keyframe annotation or ``[M, 4]`` xyxy boxes
        lambda_actor: Weight of the actor term
        lambda_box: Weight of the box term
    """
    output = triplets if isinstance(triplets, DetectorOutput) else DetectorOutput.from_triplets(triplets)
    if output.num_outputs == 0:
        raise ValueError("build_match_cost needs at least one prediction")
    values = match_cost_tensor(output, _gt_boxes(gt, torch.float64), lambda_actor, lambda_box)
    return CostMatrix(values.cpu().numpy())


def match_clip(
    output: DetectorOutput,
    gt: Union[KeyframeAnnotation, torch.Tensor],
    lambda_actor: float = 2.0,
    lambda_box: float = 2.0,
    canonical: bool = True,
) -> Assignment:
    """Build the cost for one clip and solve it."""
    return hungarian(build_match_cost(output, gt, lambda_actor, lambda_box), canonical=canonical)

