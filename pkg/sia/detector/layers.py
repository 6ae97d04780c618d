"""Transformer building blocks shared by the video and text encoders."""

from __future__ import annotations

import math
from typing import Optional

import torch
import torch.nn.functional as F
from torch import nn


class LowRankAdapter(nn.Module):
    """
    Trainable low-rank additive correction ``(alpha / r) * B(A(x))``.

    ``B`` starts at zero so a fresh adapter leaves its host layer unchanged.
    """

    def __init__(self, in_features: int, out_features: int, rank: int, alpha: float):
        super().__init__()
        self.rank = rank
        self.scale = alpha / rank
        self.down = nn.Linear(in_features, rank, bias=False)
        self.up = nn.Linear(rank, out_features, bias=False)
        nn.init.kaiming_uniform_(self.down.weight, a=math.sqrt(5))
        nn.init.zeros_(self.up.weight)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.up(self.down(x)) * self.scale


class MLP(nn.Module):
    """Simple multi-layer perceptron with GELU between layers."""

    def __init__(self, input_dim: int, hidden_dim: int, output_dim: int, num_layers: int):
        super().__init__()
        self.num_layers = num_layers
        h = [hidden_dim] * (num_layers - 1)
        self.layers = nn.ModuleList(
            nn.Linear(n, k) for n, k in zip([input_dim] + h, h + [output_dim])
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        for i, layer in enumerate(self.layers):
            x = F.gelu(layer(x)) if i < self.num_layers - 1 else layer(x)
        return x


class ResidualAttentionBlock(nn.Module):
    """
    Pre-norm transformer block.

    When ``adapter_rank`` is set, the block's feed-forward output gains a
    ``LowRankAdapter`` term computed from the same normalized input.
    """

    def __init__(
        self,
        width: int,
        heads: int,
        mlp_ratio: int = 4,
        adapter_rank: Optional[int] = None,
        adapter_alpha: float = 1.0,
    ):
        super().__init__()
        self.ln_1 = nn.LayerNorm(width)
        self.attn = nn.MultiheadAttention(width, heads, batch_first=True)
        self.ln_2 = nn.LayerNorm(width)
        self.mlp = nn.Sequential(
            nn.Linear(width, width * mlp_ratio),
            nn.GELU(),
            nn.Linear(width * mlp_ratio, width),
        )
        self.adapter = (
            LowRankAdapter(width, width, adapter_rank, adapter_alpha)
            if adapter_rank is not None
            else None
        )

    def forward(
        self,
        x: torch.Tensor,
        attn_mask: Optional[torch.Tensor] = None,
        use_adapter: bool = True,
    ) -> torch.Tensor:
        h = self.ln_1(x)
        x = x + self.attn(h, h, h, attn_mask=attn_mask, need_weights=False)[0]
        h = self.ln_2(x)
        out = self.mlp(h)
        if self.adapter is not None and use_adapter:
            out = out + self.adapter(h)
        return x + out
