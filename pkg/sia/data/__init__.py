"""Clips, annotation parsers, manifests and the synthetic generator."""

from sia.data.ava import (
    attach_global_actions,
    parse_ava_csv,
    parse_global_sidecar,
    serialize_ava_csv,
)
from sia.data.clip import Clip
from sia.data.filters import apply_blocklist, canonicalize_labels
from sia.data.manifest import build_manifest, load_manifest, save_manifest
from sia.data.sampling import clip_frame_indices, sample_clip_frames
from sia.data.synthetic import SyntheticDataset, generate_synthetic, synthetic_vocabulary
from sia.data.tubes import parse_tube_annotations

__all__ = [
    "Clip",
    "SyntheticDataset",
    "apply_blocklist",
    "attach_global_actions",
    "build_manifest",
    "canonicalize_labels",
    "clip_frame_indices",
    "generate_synthetic",
    "load_manifest",
    "parse_ava_csv",
    "parse_global_sidecar",
    "parse_tube_annotations",
    "sample_clip_frames",
    "save_manifest",
    "serialize_ava_csv",
    "synthetic_vocabulary",
]
