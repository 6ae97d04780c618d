"""Workflows built on the core modules."""

from sia.services.benchmark import BenchmarkSuite, load_suite, run_benchmark
from sia.services.inference import detect_manifest, ensure_embedded, evaluate_manifest
from sia.services.refinement import refine_manifest_file
from sia.services.splits import ClassSplit, split_base_novel
from sia.services.training import TrainingData, TrainResult, prepare_data, train

__all__ = [
    "BenchmarkSuite",
    "ClassSplit",
    "TrainResult",
    "TrainingData",
    "detect_manifest",
    "ensure_embedded",
    "evaluate_manifest",
    "load_suite",
    "prepare_data",
    "refine_manifest_file",
    "run_benchmark",
    "split_base_novel",
    "train",
]
