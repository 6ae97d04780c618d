"""Configuration records for models, data, losses and runs."""

from __future__ import annotations

import hashlib
import json
from enum import Enum
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

RUN_CONFIG_VERSION = "1"


class DetectorMode(str, Enum):
    """Which output tokens are regressed into detections."""

    DET = "DET"
    PATCH = "PATCH"


class ModelConfig(BaseModel):
    """
    Detector architecture.

    Defaults describe the toy backbone used for desk-scale runs and tests;
    ``ModelConfig.b16()`` mirrors a ViT-B/16 video-text backbone.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    image_size: int = 32
    patch_size: int = 8
    frames: int = 4

    video_layers: int = 2
    video_width: int = 64
    video_heads: int = 2

    text_layers: int = 2
    text_width: int = 64
    text_heads: int = 2
    context_length: int = 64

    mlp_ratio: int = 4
    embed_dim: int = 64

    mode: DetectorMode = DetectorMode.DET
    n_det_tokens: int = 100
    det_positional: bool = False

    lora_rank: int = 4
    lora_alpha: float = 4.0
    text_frozen: bool = False

    logit_scale_init: float = 100.0
    logit_scale_min: float = 1.0
    logit_scale_max: float = 100.0

    @model_validator(mode="after")
    def _check_shapes(self) -> "ModelConfig":
        if self.image_size % self.patch_size != 0:
            raise ValueError(
                f"image_size {self.image_size} not divisible by patch_size {self.patch_size}"
            )
        if self.video_width % self.video_heads or self.text_width % self.text_heads:
            raise ValueError("transformer width must be divisible by its head count")
        if self.mode == DetectorMode.DET and self.n_det_tokens < 1:
            raise ValueError("DET mode needs at least one detection token")
        if self.lora_rank < 1:
            raise ValueError("lora_rank must be positive")
        return self

    @classmethod
    def toy(cls, **overrides) -> "ModelConfig":
        return cls(**overrides)

    @classmethod
    def b16(cls, **overrides) -> "ModelConfig":
        values = dict(
            image_size=224,
            patch_size=16,
            frames=8,
            video_layers=12,
            video_width=768,
            video_heads=12,
            text_layers=12,
            text_width=512,
            text_heads=8,
            context_length=77,
            embed_dim=512,
        )
        values.update(overrides)
        return cls(**values)

    @property
    def grid_size(self) -> int:
        return self.image_size // self.patch_size

    @property
    def num_patches(self) -> int:
        return self.grid_size * self.grid_size

    @property
    def num_outputs(self) -> int:
        """Number of triplets produced per clip."""
        if self.mode == DetectorMode.DET:
            return self.n_det_tokens
        return self.num_patches

    def config_hash(self) -> str:
        payload = json.dumps(self.model_dump(mode="json"), sort_keys=True)
        return hashlib.sha1(payload.encode("utf-8")).hexdigest()


class SynthConfig(BaseModel):
    """Synthetic clip generator: coloured rectangles moving over noise."""

    model_config = ConfigDict(extra="forbid")

    image_size: int = 32
    frames: int = 4
    colors: List[str] = Field(default_factory=lambda: ["red", "green", "blue"])
    directions: List[str] = Field(
        default_factory=lambda: ["left", "right", "up", "down"]
    )
    min_actors: int = 1
    max_actors: int = 3
    min_size: int = 6
    max_size: int = 12
    speed: Tuple[int, int] = (1, 2)
    noise: float = 0.15

    # Fraction of clips carrying a clip-level global action tied to one actor
    global_fraction: float = Field(default=0.0, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _check(self) -> "SynthConfig":
        if not 1 <= self.min_actors <= self.max_actors:
            raise ValueError("need 1 <= min_actors <= max_actors")
        if self.max_size * 2 > self.image_size:
            raise ValueError("max_size too large for the frame")
        known = {"left", "right", "up", "down"}
        unknown = set(self.directions) - known
        if unknown:
            raise ValueError(f"unsupported directions: {sorted(unknown)}")
        return self


class LossWeights(BaseModel):
    """Weights of the set-prediction objective."""

    model_config = ConfigDict(extra="forbid")

    lambda_actor: float = Field(default=2.0, ge=0.0)
    lambda_box: float = Field(default=2.0, ge=0.0)
    lambda_action: float = Field(default=2.0, ge=0.0)
    background_weight: float = 0.1
    negatives: Literal["federated", "full"] = "federated"


class OptimConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    lr: float = 1e-4
    weight_decay: float = 0.0
    steps: int = Field(default=1000, ge=0)
    batch_size: int = Field(default=8, ge=1)
    seed: int = 0
    grad_clip: float = 1.0
    cosine: bool = True
    log_every: int = 50
    checkpoint_every: int = 0


class DataConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    train_manifest: Optional[str] = None
    synthetic: Optional[SynthConfig] = None
    synthetic_clips: int = Field(default=8, ge=1)
    synthetic_seed: int = 0

    # Frames per clip; None follows the model config
    frames: Optional[int] = None
    stride: int = Field(default=4, ge=1)
    class_balanced: bool = False
    blocklist: List[str] = Field(default_factory=list)


class VocabConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    bank: Optional[str] = None
    vocabulary: Optional[str] = None
    augmentation: bool = True


class EvalConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    iou_thresh: float = Field(default=0.5, gt=0.0, le=1.0)
    p_act_threshold: float = Field(default=0.5, ge=0.0, le=1.0)


class MatchingConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    canonical_ties: bool = True


class RunConfig(BaseModel):
    """Everything a training run needs; loaded from a JSON document."""

    model_config = ConfigDict(extra="forbid")

    version: str = RUN_CONFIG_VERSION
    model: ModelConfig = Field(default_factory=ModelConfig)
    data: DataConfig = Field(default_factory=DataConfig)
    loss: LossWeights = Field(default_factory=LossWeights)
    optim: OptimConfig = Field(default_factory=OptimConfig)
    vocab: VocabConfig = Field(default_factory=VocabConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)
    matching: MatchingConfig = Field(default_factory=MatchingConfig)
    output_dir: str = "runs/default"

    @model_validator(mode="after")
    def _check(self) -> "RunConfig":
        if self.version != RUN_CONFIG_VERSION:
            raise ValueError(f"unsupported run config version {self.version!r}")
        if self.data.train_manifest is None and self.data.synthetic is None:
            raise ValueError("data needs either train_manifest or synthetic")
        if self.data.frames is not None and self.data.frames != self.model.frames:
            raise ValueError(
                f"data.frames={self.data.frames} disagrees with model.frames={self.model.frames}"
            )
        synth = self.data.synthetic
        if synth is not None and (
            synth.frames != self.model.frames or synth.image_size != self.model.image_size
        ):
            raise ValueError("synthetic clips must match the model's frames and image_size")
        return self

    @property
    def clip_frames(self) -> int:
        return self.data.frames or self.model.frames


def load_run_config(path: Union[str, Path]) -> RunConfig:
    """Read and validate a run configuration document."""
    text = Path(path).read_text(encoding="utf-8")
    return RunConfig.model_validate_json(text)
