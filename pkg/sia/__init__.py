"""
sia - open-vocabulary spatio-temporal action detection

An encoder-only video-text detector that regresses [DET] tokens into
(box, actor probability, embedding) triplets, trained by bipartite matching
and scored against per-class descriptor banks.

Architecture:
- models/: pydantic records (annotations, manifests, vocabularies, configs)
- data/: annotation parsers, manifests, clip sampling, synthetic clips
- sources/: frame sources (raw files, in-memory store)
- vocab/: vocabularies, descriptor banks and generators
- detector/: the neural detector, scoring and checkpoints
- matching.py, loss.py: set-prediction training objective
- weaksup.py: NWS/AWS label expansion for global-action clips
- evaluation.py: frame-level mAP
- services/: training, refinement, benchmark and split workflows
- cache/: text-embedding cache
- config/: environment settings
- server/: FastAPI server
"""

__version__ = "0.1.0"

from sia.config.settings import Settings, get_settings
from sia.errors import SiaError
from sia.models.annotations import DatasetManifest, KeyframeAnnotation
from sia.models.config import ModelConfig, RunConfig

__all__ = [
    "__version__",
    "DatasetManifest",
    "KeyframeAnnotation",
    "ModelConfig",
    "RunConfig",
    "Settings",
    "SiaError",
    "get_settings",
]
