"""Causal text encoder with low-rank adapters on every feed-forward block."""

from __future__ import annotations

from typing import Iterator, Sequence

import torch
import torch.nn.functional as F
from torch import nn

from sia.detector.layers import ResidualAttentionBlock
from sia.detector.tokenizer import VOCAB_SIZE, ByteTokenizer
from sia.models.config import ModelConfig


class TextEncoder(nn.Module):
    """
    Text tower: token and position embeddings, causal blocks, end-token
    pooling, projection to the joint space and L2 normalization.

    Base weights are frozen at construction; only adapter weights can train,
    and not even those when ``text_frozen`` is set.
    """

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        width = config.text_width
        self.tokenizer = ByteTokenizer(config.context_length)
        self.token_embedding = nn.Embedding(VOCAB_SIZE, width)
        self.positional_embedding = nn.Parameter(torch.empty(config.context_length, width))
        self.blocks = nn.ModuleList(
            ResidualAttentionBlock(
                width,
                config.text_heads,
                config.mlp_ratio,
                adapter_rank=config.lora_rank,
                adapter_alpha=config.lora_alpha,
            )
            for _ in range(config.text_layers)
        )
        self.ln_final = nn.LayerNorm(width)
        self.text_projection = nn.Linear(width, config.embed_dim, bias=False)

        nn.init.normal_(self.token_embedding.weight, std=0.02)
        nn.init.normal_(self.positional_embedding, std=0.01)
        mask = torch.full((config.context_length, config.context_length), float("-inf"))
        self.register_buffer("causal_mask", torch.triu(mask, diagonal=1), persistent=False)

        for name, param in self.named_parameters():
            param.requires_grad = ".adapter." in name and not config.text_frozen

    def adapter_parameters(self) -> Iterator[nn.Parameter]:
        for name, param in self.named_parameters():
            if ".adapter." in name:
                yield param

    def base_parameters(self) -> Iterator[nn.Parameter]:
        for name, param in self.named_parameters():
            if ".adapter." not in name:
                yield param

    def forward(
        self,
        tokens: torch.Tensor,
        eot_index: torch.Tensor,
        use_adapters: bool = True,
    ) -> torch.Tensor:
        """
        Args:
            tokens: ``[B, L]`` token ids
            eot_index: ``[B]`` end-token positions
            use_adapters: False runs the unmodified base encoder

        Returns:
            ``[B, embed_dim]`` unit-norm embeddings
        """
        x = self.token_embedding(tokens) + self.positional_embedding
        mask = self.causal_mask.to(dtype=x.dtype)
        for block in self.blocks:
            x = block(x, attn_mask=mask, use_adapter=use_adapters)
        x = self.ln_final(x)
        pooled = x[torch.arange(x.shape[0], device=x.device), eot_index]
        return F.normalize(self.text_projection(pooled), dim=-1)

    def encode(self, texts: Sequence[str], use_adapters: bool = True) -> torch.Tensor:
        device = self.positional_embedding.device
        tokens, eot = self.tokenizer.batch(list(texts))
        return self.forward(tokens.to(device), eot.to(device), use_adapters=use_adapters)
