"""Training loop for the detector."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import torch

from sia.data.filters import apply_blocklist, canonicalize_labels
from sia.data.manifest import load_manifest, resolve_relative
from sia.data.sampling import sample_clip_frames
from sia.data.synthetic import SyntheticDataset, generate_synthetic
from sia.detector.checkpoint import TrainState, load_checkpoint, save_checkpoint
from sia.detector.detector import SiaDetector, build_detector
from sia.errors import DataValidationError, TrainingDivergedError
from sia.loss import LossBreakdown, batch_loss, class_logits, compute_loss
from sia.matching import match_clip
from sia.models.annotations import DatasetManifest, KeyframeAnnotation
from sia.models.config import RunConfig
from sia.models.detection import Assignment
from sia.models.vocabulary import ActionVocabulary, DescriptorBank
from sia.vocab.bank import class_names_bank, load_descriptor_bank, sample_training_descriptor
from sia.vocab.vocabulary import load_vocabulary

logger = logging.getLogger(__name__)

METRICS_FILE = "metrics.jsonl"
CHECKPOINT_FILE = "checkpoint.sia"


@dataclass
class TrainingData:
    """Clips, labels and descriptors a run trains on."""

    manifest: DatasetManifest
    vocabulary: ActionVocabulary
    bank: DescriptorBank
    root: Optional[Path] = None
    # Set for generated clips; their frames live in the in-process store
    synthetic: Optional[SyntheticDataset] = None


@dataclass
class TrainResult:
    checkpoint_path: Path
    metrics_path: Path
    digest: str
    steps: int
    last: Dict[str, float] = field(default_factory=dict)


def prepare_data(config: RunConfig) -> TrainingData:
    """
    Resolve the run's training data.

    Synthetic runs generate their clips in memory; manifest runs read the
    vocabulary named by the manifest unless the config overrides it.
    """
    if config.data.synthetic is not None:
        dataset = generate_synthetic(
            config.data.synthetic_seed, config.data.synthetic_clips, config.data.synthetic
        )
        manifest, vocab, root = dataset.manifest, dataset.vocabulary, None
    else:
        dataset = None
        manifest_path = Path(config.data.train_manifest)
        manifest = load_manifest(manifest_path)
        vocab_ref = config.vocab.vocabulary or manifest.vocabulary_ref
        vocab = load_vocabulary(resolve_relative(manifest_path, vocab_ref))
        root = manifest_path.parent

    if config.vocab.bank and config.vocab.augmentation:
        bank = load_descriptor_bank(Path(config.vocab.bank), vocab)
    else:
        if config.vocab.augmentation:
            logger.info("No descriptor bank configured; training on class-name prompts")
        bank = class_names_bank(vocab)
    return TrainingData(manifest=manifest, vocabulary=vocab, bank=bank, root=root, synthetic=dataset)


def cosine_lr(base_lr: float, step: int, total: int, enabled: bool = True) -> float:
    """Cosine decay from ``base_lr`` to zero over ``total`` steps."""
    if not enabled or total <= 0:
        return base_lr
    return base_lr * 0.5 * (1.0 + math.cos(math.pi * step / total))


class _BatchSampler:
    """Draws clip indices uniformly or balanced over the classes present."""

    def __init__(self, annotations: List[KeyframeAnnotation], class_balanced: bool):
        self.n = len(annotations)
        self.class_balanced = class_balanced
        by_class: Dict[str, List[int]] = {}
        for i, ann in enumerate(annotations):
            for label in sorted(ann.labels()):
                by_class.setdefault(label, []).append(i)
        self.by_class = dict(sorted(by_class.items()))

    def sample(self, rng: np.random.Generator, batch_size: int) -> List[int]:
        if not self.class_balanced or not self.by_class:
            return [int(i) for i in rng.integers(self.n, size=batch_size)]
        classes = list(self.by_class)
        out = []
        for _ in range(batch_size):
            members = self.by_class[classes[int(rng.integers(len(classes)))]]
            out.append(members[int(rng.integers(len(members)))])
        return out


def _batch_texts(
    annotations: List[KeyframeAnnotation],
    vocab: ActionVocabulary,
    bank: DescriptorBank,
    negatives: str,
    rng: np.random.Generator,
) -> Tuple[List[str], List[str]]:
    """Logit columns for a batch and one sampled descriptor per column."""
    if negatives == "full":
        columns = vocab.names
    else:
        present = set()
        for ann in annotations:
            present.update(ann.labels())
        columns = [name for name in vocab.names if name in present]
    texts = [sample_training_descriptor(bank, name, rng) for name in columns]
    return columns, texts


def _dump_batch(out_dir: Path, step: int, frames: torch.Tensor, clip_ids: List[str]) -> Path:
    path = out_dir / f"diverged_step{step:06d}.npz"
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(path, frames=frames.detach().cpu().numpy(), clip_ids=np.array(clip_ids))
    return path


def train(
    config: RunConfig,
    data: Optional[TrainingData] = None,
    resume_from: Optional[Union[str, Path]] = None,
) -> TrainResult:
    """
    Train a detector and write its checkpoint and per-step metrics.

    Each step samples a batch, draws one descriptor for every class in it,
    matches every clip's predictions to its boxes and takes one AdamW step on
    the mean clip loss.

    Args:
        config: Run configuration
        data: Prepared training data; built from the config when omitted
        resume_from: Checkpoint carrying a train state to continue from

    Returns:
        Paths of the final checkpoint and metrics log

    Raises:
        TrainingDivergedError: Non-finite loss; the offending batch is dumped
        CheckpointMismatchError: Resume checkpoint written for another model
    """
    owned = data is None
    data = data or prepare_data(config)
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    metrics_path = out_dir / METRICS_FILE
    checkpoint_path = out_dir / CHECKPOINT_FILE
    optim = config.optim

    entries = data.manifest.entries
    if not entries:
        raise DataValidationError("training manifest has no clips")
    annotations = [e.training_annotation() for e in entries]
    annotations = apply_blocklist(annotations, config.data.blocklist)
    annotations = canonicalize_labels(annotations, data.vocabulary)

    frames = []
    for entry in entries:
        clip = sample_clip_frames(
            entry.source, config.clip_frames, config.data.stride, data.root, entry.clip_id
        )
        frames.append(torch.from_numpy(clip.frames))
    frames = torch.stack(frames)
    if owned and data.synthetic is not None:
        data.synthetic.release()

    model = build_detector(config.model, seed=optim.seed)
    params = [p for p in model.parameters() if p.requires_grad]
    optimizer = torch.optim.AdamW(params, lr=optim.lr, weight_decay=optim.weight_decay)
    rng = np.random.default_rng(optim.seed)
    sampler = _BatchSampler(annotations, config.data.class_balanced)

    start = 0
    running: Dict[str, float] = {}
    if resume_from is not None:
        ckpt = load_checkpoint(resume_from, expected=config.model)
        model.load_state_dict(ckpt.state_dict)
        state = ckpt.train_state
        if state is not None:
            start = state.step
            if state.optimizer is not None:
                optimizer.load_state_dict(state.optimizer)
            if state.rng is not None:
                rng.bit_generator.state = state.rng
            if state.torch_rng is not None:
                torch.set_rng_state(state.torch_rng)
            running = dict(state.running)
        logger.info(f"Resuming from {resume_from} at step {start}")
        if metrics_path.exists():
            kept = [
                line
                for line in metrics_path.read_text(encoding="utf-8").splitlines()
                if line.strip() and json.loads(line)["step"] <= start
            ]
            metrics_path.write_text("".join(line + "\n" for line in kept), encoding="utf-8")
    elif metrics_path.exists():
        metrics_path.unlink()

    model.train()
    last: Dict[str, float] = {}
    with open(metrics_path, "a", encoding="utf-8") as metrics:
        for step in range(start, optim.steps):
            lr = cosine_lr(optim.lr, step, optim.steps, optim.cosine)
            for group in optimizer.param_groups:
                group["lr"] = lr

            batch = sampler.sample(rng, optim.batch_size)
            batch_anns = [annotations[i] for i in batch]
            columns, texts = _batch_texts(
                batch_anns, data.vocabulary, data.bank, config.loss.negatives, rng
            )
            text_emb = model.encode_texts(texts) if texts else None

            batch_frames = frames[batch]
            output = model(batch_frames)
            scale = model.scale()
            parts: List[LossBreakdown] = []
            for k, ann in enumerate(batch_anns):
                out_k = output.clip(k)
                assignment = match_clip(
                    out_k.detach(),
                    ann,
                    config.loss.lambda_actor,
                    config.loss.lambda_box,
                    canonical=config.matching.canonical_ties,
                ) if ann.num_boxes else None
                if text_emb is None:
                    logits = out_k.embeddings.new_zeros((out_k.num_outputs, 0))
                else:
                    logits = class_logits(out_k, text_emb, scale)
                parts.append(
                    compute_loss(out_k, logits, ann, assignment or Assignment(), config.loss, columns)
                )
            loss = batch_loss(parts)

            if not torch.isfinite(loss.total):
                dump = _dump_batch(out_dir, step, batch_frames, [entries[i].clip_id for i in batch])
                raise TrainingDivergedError(f"non-finite loss at step {step}", dump)

            optimizer.zero_grad(set_to_none=True)
            loss.total.backward()
            if optim.grad_clip > 0:
                torch.nn.utils.clip_grad_norm_(params, optim.grad_clip)
            optimizer.step()

            last = loss.to_floats()
            seen = step + 1
            for key, value in last.items():
                running[key] = running.get(key, 0.0) + (value - running.get(key, 0.0)) / seen
            record = {"step": seen, "lr": lr, **last}
            metrics.write(json.dumps(record) + "\n")
            metrics.flush()

            if optim.log_every and seen % optim.log_every == 0:
                logger.info(
                    f"step {seen}/{optim.steps} loss {last['total']:.4f} "
                    f"(actor {last['actor']:.4f}, box {last['box']:.4f}, action {last['action']:.4f})"
                )
            if optim.checkpoint_every and seen % optim.checkpoint_every == 0 and seen < optim.steps:
                _save(out_dir / f"checkpoint_step{seen:06d}.sia", model, optimizer, rng, seen, running)

    model.eval()
    digest = _save(checkpoint_path, model, optimizer, rng, max(start, optim.steps), running)
    logger.info(f"Training finished after {optim.steps} steps; checkpoint {checkpoint_path} ({digest})")
    return TrainResult(
        checkpoint_path=checkpoint_path,
        metrics_path=metrics_path,
        digest=digest,
        steps=optim.steps,
        last=last,
    )


def _save(
    path: Path,
    model: SiaDetector,
    optimizer: torch.optim.Optimizer,
    rng: np.random.Generator,
    step: int,
    running: Dict[str, float],
) -> str:
    state = TrainState(
        step=step,
        optimizer=optimizer.state_dict(),
        rng=rng.bit_generator.state,
        torch_rng=torch.get_rng_state(),
        running=dict(running),
    )
    return save_checkpoint(path, model, state)
