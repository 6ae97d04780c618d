"""Descriptor banks: loading, sampling, embedding and similarity averaging."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Protocol, Sequence, Union

import numpy as np
import torch

from sia.cache.base import BaseCache
from sia.errors import DataValidationError, UnknownClassError
from sia.models.vocabulary import ActionVocabulary, DescriptorBank
from sia.utils import atomic_write_text
from sia.vocab.vocabulary import prompt_for

logger = logging.getLogger(__name__)

DEFAULT_DESCRIPTORS = 16


class TextEmbedder(Protocol):
    """Anything that maps texts to unit-norm embeddings under a weights version."""

    def encode_texts(self, texts: Sequence[str]) -> torch.Tensor: ...

    def text_encoder_version(self) -> str: ...


def class_names_bank(vocab: ActionVocabulary) -> DescriptorBank:
    """One descriptor per class: the class-name prompt."""
    return DescriptorBank(descriptors={name: [prompt_for(name)] for name in vocab.names})


def load_descriptor_bank(
    doc: Union[str, Path, Mapping],
    vocab: ActionVocabulary,
    augmentation: bool = True,
) -> DescriptorBank:
    """
    Build a bank covering every vocabulary class.

    Args:
        doc: Bank document or its path: ``{"version", "descriptors": {name: [texts]}}``
        vocab: Active vocabulary; classes keep its order
        augmentation: When False the document is ignored and each class gets
            its name prompt as the single descriptor

    Returns:
        Bank without cached embeddings

    Raises:
        DataValidationError: Missing version, missing classes or empty lists
    """
    if not augmentation:
        return class_names_bank(vocab)

    if isinstance(doc, (str, Path)):
        try:
            doc = json.loads(Path(doc).read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise DataValidationError(f"descriptor bank is not valid JSON: {e}") from None
    if not isinstance(doc, Mapping) or "version" not in doc:
        raise DataValidationError("descriptor bank document needs a 'version' field")
    descriptors = doc.get("descriptors")
    if not isinstance(descriptors, Mapping):
        raise DataValidationError("descriptor bank document needs a 'descriptors' mapping")

    missing = [name for name in vocab.names if name not in descriptors]
    if missing:
        raise DataValidationError(f"descriptor bank is missing classes: {', '.join(missing)}")
    empty = [name for name in vocab.names if not descriptors[name]]
    if empty:
        raise DataValidationError(f"empty descriptor list for: {', '.join(empty)}")
    extra = set(descriptors) - set(vocab.names)
    if extra:
        logger.debug(f"Ignoring {len(extra)} bank classes outside the vocabulary")

    return DescriptorBank(
        version=str(doc["version"]),
        descriptors={name: [str(t) for t in descriptors[name]] for name in vocab.names},
    )


def save_descriptor_bank(bank: DescriptorBank, path: Union[str, Path]) -> None:
    atomic_write_text(path, bank.model_dump_json(indent=2) + "\n")


def sample_training_descriptor(
    bank: DescriptorBank,
    class_id: Union[int, str],
    rng: np.random.Generator,
) -> str:
    """
    Draw one descriptor of a class uniformly at random.

    Args:
        bank: Descriptor bank
        class_id: Position in the bank's class order, or the class name
        rng: Seeded generator; replaying its state replays the draws

    Raises:
        UnknownClassError: Class not in the bank
    """
    if isinstance(class_id, str):
        name = class_id
    else:
        names = bank.class_names
        if not 0 <= class_id < len(names):
            raise UnknownClassError(f"class id {class_id} not in descriptor bank")
        name = names[class_id]
    texts = bank.descriptors_for(name)
    return texts[int(rng.integers(len(texts)))]


def averaged_similarity(e_v, class_embeddings) -> float:
    """
    Mean cosine similarity between a unit vector and each descriptor embedding.

    Similarities are averaged, not the embeddings.

    Raises:
        ValueError: Empty descriptor list or mismatched dimensions
    """
    e_v = np.asarray(e_v, dtype=np.float64)
    embeddings = np.asarray(class_embeddings, dtype=np.float64)
    if embeddings.size == 0:
        raise ValueError("averaged_similarity needs at least one descriptor embedding")
    embeddings = embeddings.reshape(-1, e_v.shape[-1]) if embeddings.ndim == 1 else embeddings
    if embeddings.shape[-1] != e_v.shape[-1]:
        raise ValueError(
            f"dimension mismatch: e_v has {e_v.shape[-1]}, descriptors have {embeddings.shape[-1]}"
        )
    value = float(np.mean(embeddings @ e_v))
    return min(1.0, max(-1.0, value))


def averaged_similarity_matrix(
    embeddings: torch.Tensor,
    bank: DescriptorBank,
    class_names: Optional[Sequence[str]] = None,
) -> torch.Tensor:
    """
    Batched ``averaged_similarity``: ``[N, d]`` vision embeddings → ``[N, C]``.

    Requires cached bank embeddings.
    """
    names = list(class_names) if class_names is not None else bank.class_names
    columns = []
    for name in names:
        text = bank.embeddings_for(name).to(device=embeddings.device, dtype=embeddings.dtype)
        columns.append((embeddings @ text.T).mean(dim=-1))
    if not columns:
        return embeddings.new_zeros((embeddings.shape[0], 0))
    return torch.stack(columns, dim=-1)


@torch.no_grad()
def embed_bank(
    bank: DescriptorBank,
    embedder: TextEmbedder,
    cache: Optional[BaseCache] = None,
    batch_size: int = 64,
) -> DescriptorBank:
    """
    Encode every descriptor once and attach ``[K, d]`` embeddings per class.

    Entries are looked up in ``cache`` under (encoder version, text) first;
    missing ones are encoded in batches and written back.
    """
    version = embedder.text_encoder_version()
    texts = sorted({t for name in bank.class_names for t in bank.descriptors_for(name)})

    vectors: Dict[str, torch.Tensor] = {}
    pending: List[str] = []
    for text in texts:
        hit = cache.get(cache.embedding_key(version, text)) if cache is not None else None
        if hit is not None:
            vectors[text] = torch.tensor(hit, dtype=torch.float32)
        else:
            pending.append(text)

    for start in range(0, len(pending), batch_size):
        chunk = pending[start : start + batch_size]
        encoded = embedder.encode_texts(chunk).detach().to("cpu", torch.float32)
        for text, vec in zip(chunk, encoded):
            vectors[text] = vec
            if cache is not None:
                cache.set(cache.embedding_key(version, text), vec.tolist())

    logger.debug(
        f"Embedded {len(texts)} descriptors ({len(texts) - len(pending)} cached, "
        f"encoder {version})"
    )
    embeddings = {
        name: torch.stack([vectors[t] for t in bank.descriptors_for(name)])
        for name in bank.class_names
    }
    bank.set_embeddings(embeddings, version)
    return bank
