"""Video encoder: per-frame patch tokens plus optional detection tokens."""

from __future__ import annotations

import torch
from torch import nn

from sia.detector.layers import ResidualAttentionBlock
from sia.errors import ConfigurationError
from sia.models.config import DetectorMode, ModelConfig


class VideoEncoder(nn.Module):
    """
    Spatiotemporal encoder without a class token.

    DET mode appends ``n_det_tokens`` learned tokens after the patch tokens
    and returns their outputs. They get no positional embedding unless
    ``det_positional`` is set. PATCH mode averages the patch outputs over
    time and returns one token per spatial position.
    """

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        width = config.video_width
        scale = width**-0.5

        self.patch_embed = nn.Conv2d(
            3, width, kernel_size=config.patch_size, stride=config.patch_size, bias=False
        )
        self.spatial_pos = nn.Parameter(scale * torch.randn(config.num_patches, width))
        self.temporal_pos = nn.Parameter(torch.zeros(config.frames, width))
        if config.mode == DetectorMode.DET:
            self.det_tokens = nn.Parameter(scale * torch.randn(config.n_det_tokens, width))
            self.det_pos = (
                nn.Parameter(torch.zeros(config.n_det_tokens, width))
                if config.det_positional
                else None
            )
        else:
            self.det_tokens = None
            self.det_pos = None

        self.ln_pre = nn.LayerNorm(width)
        self.blocks = nn.ModuleList(
            ResidualAttentionBlock(width, config.video_heads, config.mlp_ratio)
            for _ in range(config.video_layers)
        )
        self.ln_post = nn.LayerNorm(width)

    def check_input(self, frames: torch.Tensor) -> None:
        c = self.config
        expected = (c.frames, c.image_size, c.image_size, 3)
        if frames.ndim != 5 or tuple(frames.shape[1:]) != expected:
            raise ConfigurationError(
                f"expected frames of shape [B, {c.frames}, {c.image_size}, {c.image_size}, 3], "
                f"got {list(frames.shape)}"
            )

    def forward(self, frames: torch.Tensor) -> torch.Tensor:
        """
        Args:
            frames: ``[B, T, H, W, 3]`` values in [0, 1]

        Returns:
            ``[B, num_outputs, width]`` output tokens
        """
        self.check_input(frames)
        b, t = frames.shape[:2]
        x = frames.permute(0, 1, 4, 2, 3).reshape(b * t, 3, frames.shape[2], frames.shape[3])
        x = self.patch_embed(x.to(self.patch_embed.weight.dtype))
        x = x.flatten(2).transpose(1, 2)  # [B*T, P, width]
        p = x.shape[1]
        x = x.reshape(b, t, p, -1)
        x = x + self.spatial_pos[None, None] + self.temporal_pos[None, :, None]
        x = x.reshape(b, t * p, -1)

        if self.det_tokens is not None:
            det = self.det_tokens if self.det_pos is None else self.det_tokens + self.det_pos
            x = torch.cat([x, det.unsqueeze(0).expand(b, -1, -1)], dim=1)

        x = self.ln_pre(x)
        for block in self.blocks:
            x = block(x)
        x = self.ln_post(x)

        if self.det_tokens is not None:
            return x[:, t * p :]
        return x.reshape(b, t, p, -1).mean(dim=1)
