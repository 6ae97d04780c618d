"""
Descriptor generators.

Descriptors for real datasets come from an external language model and are
ingested as bank documents. Generators here run offline and only cover the
bank-building side: the ``template`` generator expands a class name with
fixed sentence patterns.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from typing import Dict, List, Optional, Type

from sia.models.vocabulary import ActionVocabulary, DescriptorBank
from sia.vocab.bank import DEFAULT_DESCRIPTORS
from sia.vocab.vocabulary import prompt_for

logger = logging.getLogger(__name__)


class BaseDescriptorGenerator(ABC):
    """
    Abstract base class for descriptor generators.

    To add a generator, subclass, implement ``generate()`` and decorate the
    class with ``@register_generator("name")``.
    """

    name: str = "base"

    @abstractmethod
    def generate(self, class_name: str, n: int) -> List[str]:
        """
        Produce descriptors for one class.

        Args:
            class_name: Vocabulary class name
            n: Number of descriptors wanted

        Returns:
            Exactly ``n`` non-empty strings
        """
        pass


class GeneratorRegistry:
    """Registry of available descriptor generators."""

    _generators: Dict[str, Type[BaseDescriptorGenerator]] = {}

    @classmethod
    def register(cls, name: str, generator_class: Type[BaseDescriptorGenerator]) -> None:
        cls._generators[name] = generator_class

    @classmethod
    def get(cls, name: str) -> Optional[Type[BaseDescriptorGenerator]]:
        return cls._generators.get(name)

    @classmethod
    def list_generators(cls) -> List[str]:
        return list(cls._generators.keys())


def register_generator(name: str):
    """Decorator registering a descriptor generator class under ``name``."""

    def decorator(cls: Type[BaseDescriptorGenerator]) -> Type[BaseDescriptorGenerator]:
        cls.name = name
        GeneratorRegistry.register(name, cls)
        return cls

    return decorator


def create_generator(name: str = "template", **kwargs) -> BaseDescriptorGenerator:
    """
    Instantiate a registered generator.

    Raises:
        ValueError: Unknown generator name
    """
    generator_class = GeneratorRegistry.get(name)
    if generator_class is None:
        raise ValueError(
            f"unknown descriptor generator {name!r} "
            f"(available: {GeneratorRegistry.list_generators()})"
        )
    return generator_class(**kwargs)


TEMPLATES = [
    "a person {}",
    "someone who is {}",
    "a video of a person {}",
    "a photo of someone {}",
    "a clip showing a person {}",
    "a human {}",
    "a frame where a person is {}",
    "an actor {}",
    "a close view of a person {}",
    "a wide shot of a person {}",
    "a blurry picture of someone {}",
    "a person in the middle of {}",
    "the action of {}",
    "a scene with a person {}",
    "footage of somebody {}",
    "a moment of a person {}",
]


@register_generator("template")
class TemplateDescriptorGenerator(BaseDescriptorGenerator):
    """Fills fixed sentence patterns with the class prompt; deterministic."""

    def __init__(self, templates: Optional[List[str]] = None):
        self.templates = templates or TEMPLATES

    def generate(self, class_name: str, n: int) -> List[str]:
        prompt = prompt_for(class_name)
        return [self.templates[i % len(self.templates)].format(prompt) for i in range(n)]


def build_descriptor_bank(
    vocab: ActionVocabulary,
    generator: Optional[BaseDescriptorGenerator] = None,
    n: int = DEFAULT_DESCRIPTORS,
) -> DescriptorBank:
    """Generate ``n`` descriptors for every vocabulary class."""
    if n < 1:
        raise ValueError("need at least one descriptor per class")
    generator = generator or create_generator("template")
    descriptors = {name: generator.generate(name, n) for name in vocab.names}
    logger.debug(f"Generated {n} descriptors for {len(vocab)} classes with {generator.name}")
    return DescriptorBank(descriptors=descriptors)
