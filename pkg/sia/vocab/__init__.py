"""Vocabularies, descriptor banks and similarity averaging."""

from sia.vocab.bank import (
    averaged_similarity,
    averaged_similarity_matrix,
    class_names_bank,
    embed_bank,
    load_descriptor_bank,
    sample_training_descriptor,
    save_descriptor_bank,
)
from sia.vocab.generators import (
    BaseDescriptorGenerator,
    build_descriptor_bank,
    create_generator,
    register_generator,
)
from sia.vocab.vocabulary import load_vocabulary, prompt_for, save_vocabulary

__all__ = [
    "BaseDescriptorGenerator",
    "averaged_similarity",
    "averaged_similarity_matrix",
    "build_descriptor_bank",
    "class_names_bank",
    "create_generator",
    "embed_bank",
    "load_descriptor_bank",
    "load_vocabulary",
    "prompt_for",
    "register_generator",
    "sample_training_descriptor",
    "save_descriptor_bank",
    "save_vocabulary",
]
