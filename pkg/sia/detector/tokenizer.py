"""Byte-level tokenizer for the text encoder."""

from __future__ import annotations

import logging
from typing import List, Sequence, Tuple

import torch

logger = logging.getLogger(__name__)

PAD, SOT, EOT = 0, 1, 2
BYTE_OFFSET = 3
VOCAB_SIZE = 256 + BYTE_OFFSET


class ByteTokenizer:
    """
    UTF-8 bytes shifted past three special ids (pad, start, end).

    Texts longer than the context are truncated with a warning; the end
    token is always kept because the encoder pools at its position.
    """

    def __init__(self, context_length: int):
        if context_length < 3:
            raise ValueError("context_length must leave room for start, end and one byte")
        self.context_length = context_length

    def encode(self, text: str) -> List[int]:
        body = [b + BYTE_OFFSET for b in text.encode("utf-8")]
        room = self.context_length - 2
        if len(body) > room:
            logger.warning(
                f"Text of {len(body)} bytes truncated to context length "
                f"{self.context_length}: {text[:40]!r}"
            )
            body = body[:room]
        return [SOT] + body + [EOT]

    def batch(self, texts: Sequence[str]) -> Tuple[torch.Tensor, torch.Tensor]:
        """
        Returns:
            ``[B, context_length]`` token ids and ``[B]`` end-token positions
        """
        ids = torch.full((len(texts), self.context_length), PAD, dtype=torch.long)
        eot = torch.zeros(len(texts), dtype=torch.long)
        for i, text in enumerate(texts):
            tokens = self.encode(text)
            ids[i, : len(tokens)] = torch.tensor(tokens, dtype=torch.long)
            eot[i] = len(tokens) - 1
        return ids, eot
