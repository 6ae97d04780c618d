"""Command-line interface for sia."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from sia.config.settings import get_settings
from sia.errors import SiaError

logger = logging.getLogger("sia")


def setup_logging(verbose: bool = False) -> None:
    """Configure logging."""
    level = logging.DEBUG if verbose else getattr(logging, get_settings().log_level.upper(), logging.INFO)
    logging.basicConfig(
        level=level,
        format="%(levelname)s: %(message)s",
    )


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(
        prog="sia",
        description="Open-vocabulary action detection: train, refine, evaluate",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s synth --seed 0 --clips 8 --out data/synth
  %(prog)s train --config runs/toy.json
  %(prog)s eval --checkpoint runs/toy/checkpoint.sia --manifest data/synth/manifest.json
  %(prog)s aws --manifest kinetics.json --checkpoint nws/checkpoint.sia --out kinetics_aws.json
        """,
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="Enable verbose logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="Train a detector from a run config")
    p.add_argument("--config", required=True, help="Run config JSON")
    p.add_argument("--resume", default=None, help="Checkpoint to resume from")
    p.add_argument("--output-dir", default=None, help="Override the config's output_dir")

    p = sub.add_parser("eval", help="Frame-level mAP of a checkpoint on a manifest")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--bank", default=None, help="Descriptor bank (default: class-name prompts)")
    p.add_argument("--vocabulary", default=None, help="Override the manifest's vocabulary")
    p.add_argument("--split", default=None, help="split.json with base/novel classes")
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--threshold", type=float, default=0.5, help="Actor probability threshold")
    p.add_argument("--stride", type=int, default=4)
    p.add_argument("--blocklist", nargs="*", default=[])
    p.add_argument("--out-dir", default=None, help="Write report.json and detections.csv here")

    p = sub.add_parser("nws", help="Append each clip's global action to every box")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--log", default=None, help="Resumable JSON-lines record log")

    p = sub.add_parser("aws", help="Assign each clip's global action to its best-matching boxes")
    p.add_argument("--manifest", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--bank", default=None)
    p.add_argument("--config", default=None, help="Run config whose model the checkpoint must match")
    p.add_argument("--top-k", type=int, default=1)
    p.add_argument("--min-similarity", type=float, default=None)
    p.add_argument("--stride", type=int, default=4)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--log", default=None, help="Resumable JSON-lines record log")

    p = sub.add_parser("benchmark", help="Evaluate a checkpoint on a suite of datasets")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--suite", required=True)
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--stride", type=int, default=4)
    p.add_argument("--out-dir", default=None)

    p = sub.add_parser("synth", help="Generate a synthetic dataset")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--clips", type=int, default=8)
    p.add_argument("--config", default=None, help="SynthConfig JSON")
    p.add_argument("--global-fraction", type=float, default=None)

    p = sub.add_parser("split", help="Split a manifest into base and novel classes")
    p.add_argument("--manifest", required=True)
    p.add_argument("--ratio", type=float, default=0.75)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=None, help="Default: next to the manifest")

    p = sub.add_parser("bank", help="Generate a descriptor bank for a vocabulary")
    p.add_argument("--vocabulary", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--generator", default="template")
    p.add_argument("--descriptors", type=int, default=16)

    p = sub.add_parser("serve", help="Serve a checkpoint over HTTP")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--vocabulary", required=True)
    p.add_argument("--bank", default=None)
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)

    return parser.parse_args(argv)


def _load_bank(path: Optional[str], vocab):
    from sia.vocab.bank import class_names_bank, load_descriptor_bank

    return load_descriptor_bank(Path(path), vocab) if path else class_names_bank(vocab)


def cmd_train(args: argparse.Namespace) -> int:
    from sia.models.config import load_run_config
    from sia.services.training import train

    config = load_run_config(args.config)
    if args.output_dir:
        config = config.model_copy(update={"output_dir": args.output_dir})
    result = train(config, resume_from=args.resume)
    logger.info(f"Checkpoint: {result.checkpoint_path}")
    print(json.dumps({"checkpoint": str(result.checkpoint_path), "digest": result.digest, **result.last}))
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    from sia.data.manifest import load_manifest, resolve_relative
    from sia.detector.checkpoint import load_detector
    from sia.evaluation import split_report, write_detections_csv, write_report
    from sia.services.inference import evaluate_manifest
    from sia.vocab.vocabulary import load_vocabulary

    detector, _ = load_detector(args.checkpoint)
    manifest_path = Path(args.manifest)
    manifest = load_manifest(manifest_path)
    vocab = load_vocabulary(args.vocabulary or resolve_relative(manifest_path, manifest.vocabulary_ref))
    bank = _load_bank(args.bank, vocab)
    report, records = evaluate_manifest(
        detector,
        manifest,
        vocab,
        bank,
        iou_thresh=args.iou,
        p_act_threshold=args.threshold,
        stride=args.stride,
        root=manifest_path.parent,
        blocklist=args.blocklist,
    )
    output = report
    if args.split:
        split = json.loads(Path(args.split).read_text(encoding="utf-8"))
        output = split_report(report, split["base_classes"], split["novel_classes"])
    if args.out_dir:
        out = Path(args.out_dir)
        write_report(report, out / "report.json")
        write_detections_csv(records, out / "detections.csv")
        if args.split:
            write_report(output, out / "split_report.json")
    print(output.model_dump_json(indent=2))
    return 0


def cmd_refine(args: argparse.Namespace, mode: str) -> int:
    from sia.models.config import load_run_config
    from sia.services.refinement import refine_manifest_file

    kwargs = {}
    if mode == "AWS":
        expected = load_run_config(args.config).model if args.config else None
        kwargs = dict(
            checkpoint=args.checkpoint,
            expected=expected,
            bank_path=args.bank,
            top_k=args.top_k,
            min_similarity=args.min_similarity,
            stride=args.stride,
            max_workers=args.workers,
        )
    result = refine_manifest_file(args.manifest, args.out, mode, log_path=args.log, **kwargs)
    failed = result.failed
    for record in failed:
        logger.error(f"{record.clip_id}: {record.error}")
    return 1 if failed else 0


def cmd_benchmark(args: argparse.Namespace) -> int:
    from sia.detector.checkpoint import load_detector
    from sia.models.config import EvalConfig
    from sia.services.benchmark import load_suite, run_benchmark

    detector, ckpt = load_detector(args.checkpoint)
    suite_path = Path(args.suite)
    report = run_benchmark(
        detector,
        load_suite(suite_path),
        suite_path.parent,
        EvalConfig(iou_thresh=args.iou, p_act_threshold=args.threshold),
        stride=args.stride,
        checkpoint_hash=ckpt.digest,
        out_dir=args.out_dir,
    )
    print(json.dumps(report.table(), indent=2))
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    from sia.data.synthetic import generate_synthetic
    from sia.models.config import SynthConfig

    config = SynthConfig()
    if args.config:
        config = SynthConfig.model_validate_json(Path(args.config).read_text(encoding="utf-8"))
    if args.global_fraction is not None:
        config = SynthConfig.model_validate({**config.model_dump(), "global_fraction": args.global_fraction})
    dataset = generate_synthetic(args.seed, args.clips, config)
    manifest_path = dataset.save(args.out)
    dataset.release()
    print(str(manifest_path))
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    from sia.data.manifest import load_manifest, resolve_relative, save_manifest
    from sia.services.splits import split_base_novel
    from sia.utils import atomic_write_text
    from sia.vocab.vocabulary import load_vocabulary

    manifest_path = Path(args.manifest)
    manifest = load_manifest(manifest_path)
    vocab = load_vocabulary(resolve_relative(manifest_path, manifest.vocabulary_ref))
    split = split_base_novel(manifest, vocab, args.ratio, args.seed)
    out = Path(args.out_dir) if args.out_dir else manifest_path.parent
    stem = manifest_path.stem
    save_manifest(split.base, out / f"{stem}_base.json")
    save_manifest(split.novel, out / f"{stem}_novel.json")
    doc = {
        "ratio": args.ratio,
        "seed": args.seed,
        "base_classes": split.base_classes,
        "novel_classes": split.novel_classes,
    }
    atomic_write_text(out / f"{stem}_split.json", json.dumps(doc, indent=2) + "\n")
    logger.info(f"{len(split.base_classes)} base / {len(split.novel_classes)} novel classes")
    return 0


def cmd_bank(args: argparse.Namespace) -> int:
    from sia.vocab.bank import save_descriptor_bank
    from sia.vocab.generators import build_descriptor_bank, create_generator
    from sia.vocab.vocabulary import load_vocabulary

    vocab = load_vocabulary(args.vocabulary)
    bank = build_descriptor_bank(vocab, create_generator(args.generator), n=args.descriptors)
    save_descriptor_bank(bank, args.out)
    logger.info(f"Wrote {len(vocab)} classes x {args.descriptors} descriptors to {args.out}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from sia.detector.checkpoint import load_detector
    from sia.server.main import create_app
    from sia.vocab.vocabulary import load_vocabulary

    settings = get_settings()
    detector, ckpt = load_detector(args.checkpoint)
    vocab = load_vocabulary(args.vocabulary)
    app = create_app(detector, _load_bank(args.bank, vocab), vocab, checkpoint_hash=ckpt.digest)
    uvicorn.run(
        app,
        host=args.host or settings.server.host,
        port=args.port or settings.server.port,
    )
    return 0


COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "nws": lambda args: cmd_refine(args, "NWS"),
    "aws": lambda args: cmd_refine(args, "AWS"),
    "benchmark": cmd_benchmark,
    "synth": cmd_synth,
    "split": cmd_split,
    "bank": cmd_bank,
    "serve": cmd_serve,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point."""
    args = parse_args(argv)
    setup_logging(args.verbose)

    try:
        return COMMANDS[args.command](args)
    except KeyboardInterrupt:
        logging.info("Interrupted")
        return 130
    except (SiaError, ValidationError, OSError, ValueError) as e:
        logging.error(f"Error: {e}")
        return 1
    except Exception as e:
        logging.exception(f"Error: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
