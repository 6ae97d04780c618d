"""The detector: encoders, heads, scoring and checkpoints."""

from sia.detector.checkpoint import (
    Checkpoint,
    TrainState,
    load_checkpoint,
    load_detector,
    save_checkpoint,
)
from sia.detector.detector import DetectorOutput, SiaDetector, build_detector
from sia.detector.gradcheck import gradient_check
from sia.detector.layers import MLP, LowRankAdapter, ResidualAttentionBlock
from sia.detector.scoring import score_actions
from sia.detector.tokenizer import ByteTokenizer

__all__ = [
    "MLP",
    "ByteTokenizer",
    "Checkpoint",
    "DetectorOutput",
    "LowRankAdapter",
    "ResidualAttentionBlock",
    "SiaDetector",
    "TrainState",
    "build_detector",
    "gradient_check",
    "load_checkpoint",
    "load_detector",
    "save_checkpoint",
    "score_actions",
]
