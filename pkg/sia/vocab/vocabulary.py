"""Action vocabulary documents."""

from __future__ import annotations

from pathlib import Path
from typing import Union

from pydantic import ValidationError

from sia.errors import DataValidationError
from sia.models.vocabulary import ActionVocabulary
from sia.utils import atomic_write_text


def prompt_for(class_name: str) -> str:
    """Text fed to the encoder for a bare class name."""
    return class_name.replace("_", " ")


def load_vocabulary(path: Union[str, Path]) -> ActionVocabulary:
    """
    Read ``{"version", "classes": [{"id", "name", "external_id"?}]}``.

    Raises:
        DataValidationError: Ids not dense from 0 or names repeated
    """
    try:
        return ActionVocabulary.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except ValidationError as e:
        raise DataValidationError(f"invalid vocabulary {path}: {e}") from None


def save_vocabulary(vocab: ActionVocabulary, path: Union[str, Path]) -> None:
    atomic_write_text(path, vocab.model_dump_json(indent=2, exclude_none=True) + "\n")
