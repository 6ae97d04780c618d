"""
Box representations, conversions and overlap kernels.

Scalar functions operate on ``BoxXYXY``/``BoxCXCYWH`` records; the tensor
functions operate on ``[..., 4]`` tensors and are used by matching, the loss
and post-processing. Zero-area boxes have IoU 0 with everything, themselves
included.
"""

from __future__ import annotations

from typing import Tuple

import torch
from torch import Tensor

from sia.models.boxes import BoxCXCYWH, BoxXYXY


def _clamp01(v: float) -> float:
    return min(1.0, max(0.0, v))


def to_xyxy(b: BoxCXCYWH) -> BoxXYXY:
    """Convert center form to corner form, clamping to the unit frame."""
    x1 = _clamp01(b.cx - 0.5 * b.w)
    y1 = _clamp01(b.cy - 0.5 * b.h)
    x2 = _clamp01(b.cx + 0.5 * b.w)
    y2 = _clamp01(b.cy + 0.5 * b.h)
    return BoxXYXY(x1=x1, y1=y1, x2=max(x1, x2), y2=max(y1, y2))


def to_cxcywh(b: BoxXYXY) -> BoxCXCYWH:
    """Convert corner form to center form."""
    return BoxCXCYWH(
        cx=(b.x1 + b.x2) / 2,
        cy=(b.y1 + b.y2) / 2,
        w=b.x2 - b.x1,
        h=b.y2 - b.y1,
    )


def _inter_union(a: BoxXYXY, b: BoxXYXY) -> Tuple[float, float]:
    iw = max(0.0, min(a.x2, b.x2) - max(a.x1, b.x1))
    ih = max(0.0, min(a.y2, b.y2) - max(a.y1, b.y1))
    inter = iw * ih
    return inter, a.area + b.area - inter


def iou(a: BoxXYXY, b: BoxXYXY) -> float:
    """Intersection over union; 0 when the union is empty."""
    if a.area <= 0.0 or b.area <= 0.0:
        return 0.0
    inter, union = _inter_union(a, b)
    if union <= 0.0:
        return 0.0
    return inter / union


def giou(a: BoxXYXY, b: BoxXYXY) -> float:
    """Generalized IoU: IoU minus the empty fraction of the enclosing box."""
    _, union = _inter_union(a, b)
    hull = (max(a.x2, b.x2) - min(a.x1, b.x1)) * (max(a.y2, b.y2) - min(a.y1, b.y1))
    base = iou(a, b)
    if hull <= 0.0:
        return base
    return base - (hull - union) / hull


# ---------------------------------------------------------------------------
# Tensor kernels
# ---------------------------------------------------------------------------


def box_cxcywh_to_xyxy(box: Tensor, clamp: bool = False) -> Tensor:
    cx, cy, w, h = box.unbind(-1)
    out = torch.stack([cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h], dim=-1)
    if clamp:
        out = out.clamp(0.0, 1.0)
    return out


def box_xyxy_to_cxcywh(box: Tensor) -> Tensor:
    x1, y1, x2, y2 = box.unbind(-1)
    return torch.stack([(x1 + x2) / 2, (y1 + y2) / 2, x2 - x1, y2 - y1], dim=-1)


def box_area(box: Tensor) -> Tensor:
    return (box[..., 2] - box[..., 0]).clamp(min=0) * (box[..., 3] - box[..., 1]).clamp(min=0)


def _safe_div(num: Tensor, den: Tensor) -> Tensor:
    ok = den > 0
    return torch.where(ok, num / torch.where(ok, den, torch.ones_like(den)), torch.zeros_like(num))


def box_iou(boxes1: Tensor, boxes2: Tensor) -> Tuple[Tensor, Tensor]:
    """Pairwise IoU and union of ``[N, 4]`` and ``[M, 4]`` xyxy boxes."""
    area1 = box_area(boxes1)
    area2 = box_area(boxes2)

    lt = torch.max(boxes1[:, None, :2], boxes2[None, :, :2])
    rb = torch.min(boxes1[:, None, 2:], boxes2[None, :, 2:])
    wh = (rb - lt).clamp(min=0)
    inter = wh[..., 0] * wh[..., 1]

    union = area1[:, None] + area2[None, :] - inter
    iou_ = _safe_div(inter, union)
    degenerate = (area1[:, None] <= 0) | (area2[None, :] <= 0)
    return torch.where(degenerate, torch.zeros_like(iou_), iou_), union


def generalized_box_iou(boxes1: Tensor, boxes2: Tensor) -> Tensor:
    """Pairwise GIoU of ``[N, 4]`` and ``[M, 4]`` xyxy boxes."""
    iou_, union = box_iou(boxes1, boxes2)

    lt = torch.min(boxes1[:, None, :2], boxes2[None, :, :2])
    rb = torch.max(boxes1[:, None, 2:], boxes2[None, :, 2:])
    wh = (rb - lt).clamp(min=0)
    hull = wh[..., 0] * wh[..., 1]

    return iou_ - _safe_div(hull - union, hull)


def elementwise_giou(boxes1: Tensor, boxes2: Tensor) -> Tensor:
    """GIoU of matched rows of two ``[K, 4]`` xyxy tensors."""
    area1 = box_area(boxes1)
    area2 = box_area(boxes2)

    lt = torch.max(boxes1[:, :2], boxes2[:, :2])
    rb = torch.min(boxes1[:, 2:], boxes2[:, 2:])
    wh = (rb - lt).clamp(min=0)
    inter = wh[:, 0] * wh[:, 1]
    union = area1 + area2 - inter
    iou_ = _safe_div(inter, union)
    iou_ = torch.where((area1 <= 0) | (area2 <= 0), torch.zeros_like(iou_), iou_)

    lt = torch.min(boxes1[:, :2], boxes2[:, :2])
    rb = torch.max(boxes1[:, 2:], boxes2[:, 2:])
    wh = (rb - lt).clamp(min=0)
    hull = wh[:, 0] * wh[:, 1]

    return iou_ - _safe_div(hull - union, hull)


def boxes_to_tensor(boxes, dtype: torch.dtype = torch.float32) -> Tensor:
    """Stack ``BoxXYXY`` records into an ``[N, 4]`` tensor."""
    if not boxes:
        return torch.zeros((0, 4), dtype=dtype)
    return torch.tensor([b.as_tuple() for b in boxes], dtype=dtype)
