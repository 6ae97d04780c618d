"""Turning detector outputs into per-class detection scores."""

from __future__ import annotations

from typing import List, Optional, Sequence, Union

import torch

from sia.detector.detector import DetectorOutput
from sia.geometry import box_cxcywh_to_xyxy
from sia.models.boxes import BoxXYXY
from sia.models.detection import DetectionTriplet, ScoredDetection
from sia.models.vocabulary import DescriptorBank
from sia.vocab.bank import averaged_similarity_matrix


@torch.no_grad()
def score_actions(
    triplets: Union[DetectorOutput, Sequence[DetectionTriplet]],
    bank: DescriptorBank,
    p_act_threshold: float = 0.5,
    logit_scale: Union[float, torch.Tensor] = 100.0,
    class_names: Optional[Sequence[str]] = None,
) -> List[ScoredDetection]:
    """
    Score surviving detection tokens against every bank class.

    Tokens with ``p_act <= p_act_threshold`` are dropped. For each survivor
    and class ``c`` the score is ``p_act * sigmoid(logit_scale * S_c)``
    where ``S_c`` averages the cosine similarity over the class descriptors.

    Args:
        triplets: Single-clip detector output or triplet list
        bank: Descriptor bank with cached embeddings
        p_act_threshold: Actor probability a token must exceed
        logit_scale: Similarity scale
        class_names: Score columns; defaults to the bank's class order

    Returns:
        Detections in token order with corner-form boxes clamped to [0, 1]
    """
    output = triplets if isinstance(triplets, DetectorOutput) else DetectorOutput.from_triplets(triplets)
    if output.num_outputs == 0:
        return []
    p_act = output.p_act
    keep = torch.nonzero(p_act > p_act_threshold).flatten()
    if keep.numel() == 0:
        return []

    emb = output.embeddings[keep].double()
    sims = averaged_similarity_matrix(emb, bank, class_names)
    scale = float(logit_scale)
    scores = p_act[keep].double()[:, None] * torch.sigmoid(scale * sims)
    boxes = box_cxcywh_to_xyxy(output.boxes[keep].double(), clamp=True)

    detections = []
    for row, token in enumerate(keep.tolist()):
        detections.append(
            ScoredDetection(
                token_index=token,
                box=BoxXYXY.from_sequence(boxes[row].tolist()),
                p_act=float(p_act[token]),
                scores=scores[row].tolist(),
            )
        )
    return detections
