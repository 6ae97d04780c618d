"""Cross-dataset benchmark suites."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import List, Optional, Union

from pydantic import BaseModel, Field, ValidationError

from sia.config.settings import get_settings
from sia.data.manifest import load_manifest, resolve_relative
from sia.detector.detector import SiaDetector
from sia.errors import BenchmarkError, DataValidationError
from sia.evaluation import write_detections_csv, write_report
from sia.models.config import EvalConfig
from sia.models.detection import BenchmarkReport
from sia.services.inference import evaluate_manifest
from sia.utils import slugify
from sia.vocab.bank import load_descriptor_bank
from sia.vocab.vocabulary import load_vocabulary

logger = logging.getLogger(__name__)

SUITE_VERSION = "1"


class BenchmarkDataset(BaseModel):
    name: str
    manifest: str
    bank: Optional[str] = None
    vocabulary: Optional[str] = None
    blocklist: List[str] = Field(default_factory=list)


class BenchmarkSuite(BaseModel):
    """``{"version", "datasets": [{"name", "manifest", "bank", "blocklist"?}]}``"""

    version: str = SUITE_VERSION
    datasets: List[BenchmarkDataset]


def load_suite(path: Union[str, Path]) -> BenchmarkSuite:
    try:
        suite = BenchmarkSuite.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except ValidationError as e:
        raise DataValidationError(f"invalid benchmark suite {path}: {e}") from None
    if suite.version != SUITE_VERSION:
        raise DataValidationError(f"unsupported suite version {suite.version!r}")
    names = [d.name for d in suite.datasets]
    if len(set(names)) != len(names):
        raise DataValidationError("benchmark dataset names must be unique")
    return suite


def run_benchmark(
    detector: SiaDetector,
    suite: BenchmarkSuite,
    suite_dir: Union[str, Path] = ".",
    eval_config: Optional[EvalConfig] = None,
    *,
    stride: int = 4,
    checkpoint_hash: Optional[str] = None,
    out_dir: Optional[Union[str, Path]] = None,
) -> BenchmarkReport:
    """
    Evaluate one detector on every dataset of a suite.

    Every dataset's bank is checked before any evaluation starts.

    Raises:
        BenchmarkError: A dataset has no descriptor bank or it cannot be found
    """
    eval_config = eval_config or EvalConfig()
    settings = get_settings()
    suite_dir = Path(suite_dir)

    resolved = []
    for dataset in suite.datasets:
        if not dataset.bank:
            raise BenchmarkError(f"dataset {dataset.name!r} has no descriptor bank")
        bank_path = settings.resolve_path(dataset.bank, suite_dir)
        if not bank_path.exists():
            raise BenchmarkError(f"descriptor bank for dataset {dataset.name!r} not found: {bank_path}")
        resolved.append((dataset, settings.resolve_path(dataset.manifest, suite_dir), bank_path))

    report = BenchmarkReport(checkpoint_hash=checkpoint_hash, iou_threshold=eval_config.iou_thresh)
    for dataset, manifest_path, bank_path in resolved:
        manifest = load_manifest(manifest_path)
        vocab_ref = dataset.vocabulary or manifest.vocabulary_ref
        vocab = load_vocabulary(resolve_relative(manifest_path, vocab_ref))
        bank = load_descriptor_bank(bank_path, vocab)
        logger.info(f"Benchmarking {dataset.name}: {len(manifest.entries)} clips, {len(vocab)} classes")
        result, records = evaluate_manifest(
            detector,
            manifest,
            vocab,
            bank,
            iou_thresh=eval_config.iou_thresh,
            p_act_threshold=eval_config.p_act_threshold,
            stride=stride,
            root=manifest_path.parent,
            blocklist=dataset.blocklist,
        )
        report.datasets[dataset.name] = result
        if out_dir is not None:
            write_detections_csv(records, Path(out_dir) / f"{slugify(dataset.name)}_detections.csv")

    if out_dir is not None:
        write_report(report, Path(out_dir) / "benchmark.json")
    logger.info("Benchmark: " + json.dumps(report.table()))
    return report
