"""Action vocabulary and descriptor bank records."""

from __future__ import annotations

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, PrivateAttr, field_validator, model_validator

from sia.errors import UnknownClassError


class ActionClass(BaseModel):
    """One action class; ``external_id`` is the dataset's native label id."""

    id: int = Field(ge=0)
    name: str
    external_id: Optional[str] = None


class ActionVocabulary(BaseModel):
    """Ordered action classes with dense ids starting at 0."""

    version: str = "1"
    classes: List[ActionClass] = Field(default_factory=list)

    _by_name: Dict[str, int] = PrivateAttr(default_factory=dict)
    _by_external: Dict[str, int] = PrivateAttr(default_factory=dict)

    @model_validator(mode="after")
    def _check_dense(self) -> "ActionVocabulary":
        ids = [c.id for c in self.classes]
        if ids != list(range(len(ids))):
            raise ValueError("class ids must be unique and dense from 0 in order")
        names = [c.name for c in self.classes]
        if len(set(names)) != len(names):
            raise ValueError("class names must be unique")
        self._by_name = {c.name: c.id for c in self.classes}
        self._by_external = {
            c.external_id: c.id for c in self.classes if c.external_id is not None
        }
        return self

    @classmethod
    def from_names(cls, names: List[str]) -> "ActionVocabulary":
        return cls(classes=[ActionClass(id=i, name=n) for i, n in enumerate(names)])

    def __len__(self) -> int:
        return len(self.classes)

    @property
    def names(self) -> List[str]:
        return [c.name for c in self.classes]

    def resolve(self, label: str) -> int:
        """
        Resolve an action identifier to a class id.

        Names take precedence over external ids.

        Raises:
            UnknownClassError: If the label is neither a name nor an external id
        """
        label = str(label)
        if label in self._by_name:
            return self._by_name[label]
        if label in self._by_external:
            return self._by_external[label]
        raise UnknownClassError(f"unknown action class: {label!r}")

    def contains(self, label: str) -> bool:
        try:
            self.resolve(label)
        except UnknownClassError:
            return False
        return True

    def name_of(self, class_id: int) -> str:
        if not 0 <= class_id < len(self.classes):
            raise UnknownClassError(f"unknown class id: {class_id}")
        return self.classes[class_id].name

    def canonical_name(self, label: str) -> str:
        """Map a name or external id to the class name."""
        return self.name_of(self.resolve(label))


class DescriptorBank(BaseModel):
    """
    Per-class textual descriptors.

    Text embeddings are attached after loading (see ``sia.vocab.bank``); the
    descriptor lists themselves never change once the bank is built.
    """

    version: str = "1"
    descriptors: Dict[str, List[str]]

    _embeddings: Dict[str, Any] = PrivateAttr(default_factory=dict)
    _encoder_version: Optional[str] = PrivateAttr(default=None)

    @field_validator("descriptors")
    @classmethod
    def _non_empty(cls, value: Dict[str, List[str]]) -> Dict[str, List[str]]:
        empty = [name for name, texts in value.items() if not texts]
        if empty:
            raise ValueError(f"empty descriptor list for: {', '.join(empty)}")
        return value

    @property
    def class_names(self) -> List[str]:
        return list(self.descriptors.keys())

    def descriptors_for(self, class_name: str) -> List[str]:
        try:
            return self.descriptors[class_name]
        except KeyError:
            raise UnknownClassError(f"class not in descriptor bank: {class_name!r}") from None

    @property
    def has_embeddings(self) -> bool:
        return bool(self._embeddings) and set(self._embeddings) >= set(self.descriptors)

    @property
    def encoder_version(self) -> Optional[str]:
        return self._encoder_version

    def embeddings_for(self, class_name: str) -> Any:
        """Cached ``[K, d]`` descriptor embeddings for a class."""
        if class_name not in self._embeddings:
            raise UnknownClassError(f"no cached embeddings for class {class_name!r}")
        return self._embeddings[class_name]

    def set_embeddings(self, embeddings: Dict[str, Any], encoder_version: str) -> None:
        self._embeddings = dict(embeddings)
        self._encoder_version = encoder_version
