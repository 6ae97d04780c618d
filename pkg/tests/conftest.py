"""Shared fixtures: toy model config, synthetic clips, embedded banks."""

from __future__ import annotations

import pytest
import torch

from sia.cache.factory import reset_cache
from sia.config.settings import get_settings
from sia.data.synthetic import generate_synthetic
from sia.detector.detector import build_detector
from sia.models.config import ModelConfig, SynthConfig
from sia.sources.memory import MemoryFrameStore
from sia.vocab.bank import class_names_bank, embed_bank


@pytest.fixture(autouse=True)
def _isolated_state(monkeypatch):
    """Fresh settings, cache and frame store for every test."""
    monkeypatch.delenv("SIA_DATA_DIR", raising=False)
    get_settings.cache_clear()
    reset_cache()
    yield
    MemoryFrameStore.clear()
    get_settings.cache_clear()
    reset_cache()


@pytest.fixture
def toy_config() -> ModelConfig:
    return ModelConfig(n_det_tokens=12)


@pytest.fixture
def synth_config() -> SynthConfig:
    return SynthConfig(image_size=32, frames=4)


@pytest.fixture
def synth_dataset(synth_config):
    return generate_synthetic(seed=0, n_clips=4, config=synth_config)


@pytest.fixture
def detector(toy_config):
    torch.manual_seed(0)
    return build_detector(toy_config, seed=0).eval()


@pytest.fixture
def embedded_bank(detector, synth_dataset):
    bank = class_names_bank(synth_dataset.vocabulary)
    return embed_bank(bank, detector)
