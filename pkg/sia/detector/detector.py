"""The encoder-only open-vocabulary action detector."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from sia.data.clip import Clip
from sia.detector.layers import MLP
from sia.detector.text import TextEncoder
from sia.detector.video import VideoEncoder
from sia.models.config import ModelConfig
from sia.models.detection import DetectionTriplet
from sia.utils import sha1_short

logger = logging.getLogger(__name__)

ACTOR, BACKGROUND = 0, 1


@dataclass
class DetectorOutput:
    """
    Raw head outputs.

    Tensors are ``[B, N, ...]`` for a batch or ``[N, ...]`` for one clip
    (see ``clip()``).
    """

    boxes: torch.Tensor  # cxcywh in [0, 1]
    actor_logits: torch.Tensor  # index 0 = actor, 1 = background
    embeddings: torch.Tensor  # unit-norm

    @property
    def p_act(self) -> torch.Tensor:
        return self.actor_logits.softmax(dim=-1)[..., ACTOR]

    @property
    def num_outputs(self) -> int:
        return int(self.boxes.shape[-2])

    def clip(self, index: int) -> "DetectorOutput":
        return DetectorOutput(
            boxes=self.boxes[index],
            actor_logits=self.actor_logits[index],
            embeddings=self.embeddings[index],
        )

    def detach(self) -> "DetectorOutput":
        return DetectorOutput(
            boxes=self.boxes.detach(),
            actor_logits=self.actor_logits.detach(),
            embeddings=self.embeddings.detach(),
        )

    def to_triplets(self) -> List[DetectionTriplet]:
        """Per-token triplets of a single clip output."""
        if self.boxes.ndim != 2:
            raise ValueError("to_triplets() needs a single-clip output; use clip(i)")
        boxes = self.boxes.detach().double().clamp(0.0, 1.0).tolist()
        p_act = self.p_act.detach().double().clamp(0.0, 1.0).tolist()
        emb = F.normalize(self.embeddings.detach().double(), dim=-1).tolist()
        return [
            DetectionTriplet(box=dict(zip(("cx", "cy", "w", "h"), b)), p_act=p, e_v=e)
            for b, p, e in zip(boxes, p_act, emb)
        ]

    @classmethod
    def from_triplets(cls, triplets: Sequence[DetectionTriplet]) -> "DetectorOutput":
        """Rebuild tensors from triplets; logits reproduce each ``p_act``."""
        boxes = torch.tensor([t.box.as_tuple() for t in triplets], dtype=torch.float64)
        p = torch.tensor([t.p_act for t in triplets], dtype=torch.float64)
        p = p.clamp(1e-12, 1 - 1e-12)
        logits = torch.stack([torch.log(p), torch.log1p(-p)], dim=-1)
        emb = torch.tensor([t.e_v for t in triplets], dtype=torch.float64)
        return cls(boxes=boxes.reshape(-1, 4), actor_logits=logits.reshape(-1, 2), embeddings=emb)


class SiaDetector(nn.Module):
    """
    Video encoder with box, actor and embedding heads, plus a text encoder
    for class descriptors and a learnable similarity scale.
    """

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        width = config.video_width
        self.video = VideoEncoder(config)
        self.text = TextEncoder(config)
        self.box_head = MLP(width, width, 4, 3)
        self.actor_head = MLP(width, width, 2, 2)
        self.projection = nn.Linear(width, config.embed_dim)
        self.logit_scale = nn.Parameter(torch.tensor(float(config.logit_scale_init)))

    @property
    def device(self) -> torch.device:
        return self.logit_scale.device

    def scale(self) -> torch.Tensor:
        """Similarity scale clamped to the configured range."""
        return self.logit_scale.clamp(self.config.logit_scale_min, self.config.logit_scale_max)

    def forward(self, frames: torch.Tensor) -> DetectorOutput:
        """
        Args:
            frames: ``[B, T, H, W, 3]`` clip batch

        Returns:
            Batched head outputs with ``num_outputs`` tokens per clip
        """
        tokens = self.video(frames.to(self.device))
        return DetectorOutput(
            boxes=self.box_head(tokens).sigmoid(),
            actor_logits=self.actor_head(tokens),
            embeddings=F.normalize(self.projection(tokens), dim=-1),
        )

    def encode_texts(self, texts: Sequence[str], use_adapters: bool = True) -> torch.Tensor:
        return self.text.encode(texts, use_adapters=use_adapters)

    @torch.no_grad()
    def encode_text(self, text: str, use_adapters: bool = True) -> torch.Tensor:
        """Unit-norm ``[embed_dim]`` embedding of one text."""
        return self.text.encode([text], use_adapters=use_adapters)[0]

    @torch.no_grad()
    def encode_video(self, clip: Union[Clip, np.ndarray, torch.Tensor]) -> List[DetectionTriplet]:
        """Triplets (box, actor probability, vision embedding) for one clip."""
        frames = clip.frames if isinstance(clip, Clip) else clip
        frames = torch.as_tensor(np.asarray(frames) if not torch.is_tensor(frames) else frames)
        dtype = self.logit_scale.dtype
        return self.forward(frames.to(dtype).unsqueeze(0)).clip(0).to_triplets()

    def text_encoder_version(self) -> str:
        """Hash of the text tower weights; keys the descriptor embedding cache."""
        parts = []
        for name, tensor in sorted(self.text.state_dict().items()):
            parts.append(name.encode("utf-8"))
            parts.append(tensor.detach().cpu().contiguous().numpy().tobytes())
        return sha1_short(b"".join(parts), 16)


def build_detector(config: Optional[ModelConfig] = None, seed: Optional[int] = None) -> SiaDetector:
    """Construct a detector; a seed makes the initialization reproducible."""
    if seed is not None:
        torch.manual_seed(seed)
    config = config or ModelConfig()
    detector = SiaDetector(config)
    n_train = sum(p.numel() for p in detector.parameters() if p.requires_grad)
    logger.debug(f"Built {config.mode.value} detector with {n_train} trainable parameters")
    return detector
