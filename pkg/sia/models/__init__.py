"""Data models for sia."""

from sia.models.annotations import (
    DatasetManifest,
    FrameLocator,
    KeyframeAnnotation,
    ManifestEntry,
    Provenance,
)
from sia.models.boxes import BoxCXCYWH, BoxXYXY
from sia.models.config import (
    DataConfig,
    DetectorMode,
    EvalConfig,
    LossWeights,
    MatchingConfig,
    ModelConfig,
    OptimConfig,
    RunConfig,
    SynthConfig,
    VocabConfig,
    load_run_config,
)
from sia.models.detection import (
    Assignment,
    BenchmarkReport,
    ClassResult,
    DetectionRecord,
    DetectionTriplet,
    EvalReport,
    ScoredDetection,
    SplitReport,
)
from sia.models.pseudolabel import PseudolabelRecord
from sia.models.vocabulary import ActionClass, ActionVocabulary, DescriptorBank

__all__ = [
    "ActionClass",
    "ActionVocabulary",
    "Assignment",
    "BenchmarkReport",
    "BoxCXCYWH",
    "BoxXYXY",
    "ClassResult",
    "DataConfig",
    "DatasetManifest",
    "DescriptorBank",
    "DetectionRecord",
    "DetectionTriplet",
    "DetectorMode",
    "EvalConfig",
    "EvalReport",
    "FrameLocator",
    "KeyframeAnnotation",
    "LossWeights",
    "ManifestEntry",
    "MatchingConfig",
    "ModelConfig",
    "OptimConfig",
    "Provenance",
    "PseudolabelRecord",
    "RunConfig",
    "ScoredDetection",
    "SplitReport",
    "SynthConfig",
    "VocabConfig",
    "load_run_config",
]
