"""Tests for the detector, text encoder, scoring and checkpoints."""

import logging

import numpy as np
import pytest
import torch

from sia.detector.checkpoint import (
    TrainState,
    load_checkpoint,
    load_detector,
    save_checkpoint,
)
from sia.detector.detector import DetectorOutput, build_detector
from sia.detector.gradcheck import gradient_check
from sia.detector.layers import LowRankAdapter
from sia.detector.scoring import score_actions
from sia.detector.tokenizer import EOT, ByteTokenizer
from sia.errors import CheckpointMismatchError, ConfigurationError
from sia.loss import class_logits, compute_loss
from sia.matching import match_clip
from sia.models.annotations import KeyframeAnnotation
from sia.models.boxes import BoxCXCYWH, BoxXYXY
from sia.models.config import DetectorMode, LossWeights, ModelConfig
from sia.models.detection import DetectionTriplet
from sia.models.vocabulary import DescriptorBank


def _frames(config: ModelConfig, seed: int = 0, batch: int = 1) -> torch.Tensor:
    g = torch.Generator().manual_seed(seed)
    shape = (batch, config.frames, config.image_size, config.image_size, 3)
    return torch.rand(shape, generator=g)


def _random_text(rng) -> str:
    letters = "abcdefghijklmnopqrstuvwxyz _"
    return "".join(rng.choice(list(letters), size=int(rng.integers(1, 40))))


class TestVideoPath:
    def test_default_det_token_count(self):
        config = ModelConfig()
        model = build_detector(config, seed=0).eval()
        triplets = model.encode_video(_frames(config)[0])
        assert len(triplets) == 100
        for t in triplets:
            assert 0.0 <= t.p_act <= 1.0
            assert np.linalg.norm(t.e_v) == pytest.approx(1.0, abs=1e-5)

    def test_patch_mode_one_output_per_patch(self):
        config = ModelConfig(mode=DetectorMode.PATCH)
        model = build_detector(config, seed=0).eval()
        with torch.no_grad():
            output = model(_frames(config))
        assert output.num_outputs == 16

    def test_shape_mismatch(self, detector):
        with pytest.raises(ConfigurationError):
            detector(torch.zeros(1, 3, 32, 32, 3))

    def test_pixel_perturbation_changes_output(self, detector, toy_config):
        frames = _frames(toy_config)
        with torch.no_grad():
            before = detector(frames).boxes.clone()
            frames[0, 0, 5, 5, 0] += 0.5
            after = detector(frames).boxes
        assert not torch.equal(before, after)

    def test_swapping_det_tokens_swaps_outputs(self, detector, toy_config):
        frames = _frames(toy_config)
        with torch.no_grad():
            before = detector(frames).clip(0)
            tokens = detector.video.det_tokens
            tokens[[2, 7]] = tokens[[7, 2]].clone()
            after = detector(frames).clip(0)
        perm = list(range(toy_config.n_det_tokens))
        perm[2], perm[7] = 7, 2
        assert torch.allclose(after.boxes, before.boxes[perm], atol=1e-5)
        assert torch.allclose(after.embeddings, before.embeddings[perm], atol=1e-5)
        assert torch.allclose(after.p_act, before.p_act[perm], atol=1e-5)


class TestTextPath:
    def test_zero_adapters_match_base_encoder(self, detector):
        rng = np.random.default_rng(0)
        texts = [_random_text(rng) for _ in range(50)]
        with torch.no_grad():
            adapted = detector.encode_texts(texts, use_adapters=True)
            base = detector.encode_texts(texts, use_adapters=False)
        assert torch.equal(adapted, base)

    def test_unit_norm(self, detector):
        emb = detector.encode_text("a person riding a horse")
        assert float(emb.norm()) == pytest.approx(1.0, abs=1e-5)

    def test_nonzero_adapter_changes_output(self, detector):
        with torch.no_grad():
            base = detector.encode_text("walk")
            detector.text.blocks[0].adapter.up.weight.fill_(0.05)
            adapted = detector.encode_text("walk")
        assert not torch.allclose(base, adapted)

    def test_truncation_warns(self, caplog):
        tokenizer = ByteTokenizer(context_length=8)
        with caplog.at_level(logging.WARNING):
            ids = tokenizer.encode("a very long description")
        assert len(ids) == 8 and ids[-1] == EOT
        assert "truncated" in caplog.text

    def test_only_adapters_trainable(self, detector):
        assert all(not p.requires_grad for p in detector.text.base_parameters())
        assert all(p.requires_grad for p in detector.text.adapter_parameters())
        frozen = build_detector(ModelConfig(text_frozen=True, n_det_tokens=4), seed=0)
        assert not any(p.requires_grad for p in frozen.text.parameters())

    def test_adapter_is_identity_at_start(self):
        adapter = LowRankAdapter(8, 8, rank=2, alpha=2.0)
        assert torch.equal(adapter(torch.randn(3, 8)), torch.zeros(3, 8))


def _toy_annotation() -> KeyframeAnnotation:
    return KeyframeAnnotation(
        clip_id="c",
        boxes=[BoxXYXY(x1=0.1, y1=0.1, x2=0.4, y2=0.5), BoxXYXY(x1=0.5, y1=0.3, x2=0.9, y2=0.8)],
        action_sets=[["walk"], ["ride", "walk"]],
    )


class TestGradients:
    def test_box_loss_gradients(self, toy_config):
        torch.manual_seed(0)
        model = build_detector(toy_config, seed=0).double()
        frames = _frames(toy_config).double()
        ann = _toy_annotation()
        with torch.no_grad():
            assignment = match_clip(model(frames).clip(0), ann)
        weights = LossWeights(lambda_actor=0.0, lambda_box=1.0, lambda_action=0.0)

        def closure():
            out = model(frames).clip(0)
            logits = out.embeddings.new_zeros((out.num_outputs, 0))
            return compute_loss(out, logits, ann, assignment, weights, []).total

        assert gradient_check(model, closure, n_params=200, step=1e-5) < 1e-3

    def test_total_loss_gradients(self):
        config = ModelConfig(n_det_tokens=12, logit_scale_init=10.0)
        model = build_detector(config, seed=1).double()
        with torch.no_grad():
            for block in model.text.blocks:
                block.adapter.up.weight.normal_(0, 0.02)
        frames = _frames(config, seed=1).double()
        ann = _toy_annotation()
        with torch.no_grad():
            assignment = match_clip(model(frames).clip(0), ann)

        def closure():
            out = model(frames).clip(0)
            text = model.encode_texts(["walk", "ride"])
            logits = class_logits(out, text, model.scale())
            return compute_loss(out, logits, ann, assignment, LossWeights(), ["walk", "ride"]).total

        assert gradient_check(model, closure, n_params=200, step=1e-5) < 1e-3

    def test_frozen_base_gets_no_gradient_and_adapters_do(self, detector, toy_config):
        out = detector(_frames(toy_config)).clip(0)
        text = detector.encode_texts(["walk", "ride"])
        ann = _toy_annotation()
        assignment = match_clip(out.detach(), ann)
        loss = compute_loss(out, class_logits(out, text, detector.scale()), ann, assignment, LossWeights(), ["walk", "ride"])
        loss.total.backward()
        assert all(p.grad is None for p in detector.text.base_parameters())
        assert any(p.grad is not None and p.grad.abs().sum() > 0 for p in detector.text.adapter_parameters())


def _bank(**embeddings) -> DescriptorBank:
    bank = DescriptorBank(descriptors={name: [name] * len(e) for name, e in embeddings.items()})
    bank.set_embeddings({k: torch.tensor(v, dtype=torch.float32) for k, v in embeddings.items()}, "test")
    return bank


def _triplet(p_act: float, e_v) -> DetectionTriplet:
    return DetectionTriplet(box=BoxCXCYWH(cx=0.5, cy=0.5, w=0.2, h=0.2), p_act=p_act, e_v=list(e_v))


class TestScoring:
    def test_background_tokens_dropped(self):
        bank = _bank(walk=[[1.0, 0.0]])
        assert score_actions([_triplet(0.0, [1.0, 0.0])] * 3, bank) == []

    def test_perfect_match_scores_one(self):
        bank = _bank(walk=[[1.0, 0.0]])
        (det,) = score_actions([_triplet(1.0, [1.0, 0.0])], bank, logit_scale=100.0)
        assert det.scores[0] == pytest.approx(1.0, abs=1e-9)
        assert det.box.as_tuple() == pytest.approx((0.4, 0.4, 0.6, 0.6))

    def test_scores_match_explicit_dot_products(self):
        rng = np.random.default_rng(0)
        emb = {name: rng.normal(size=(3, 4)) for name in ("a", "b")}
        emb = {k: (v / np.linalg.norm(v, axis=1, keepdims=True)).tolist() for k, v in emb.items()}
        bank = _bank(**emb)
        e = rng.normal(size=4)
        e /= np.linalg.norm(e)
        (det,) = score_actions([_triplet(0.8, e)], bank, logit_scale=20.0)
        for c, name in enumerate(["a", "b"]):
            s = float(np.mean(np.asarray(emb[name], dtype=np.float32).astype(np.float64) @ e))
            assert det.scores[c] == pytest.approx(0.8 / (1.0 + np.exp(-20.0 * s)), rel=1e-6)

    def test_triplet_round_trip(self, detector, toy_config):
        with torch.no_grad():
            out = detector(_frames(toy_config)).clip(0)
        rebuilt = DetectorOutput.from_triplets(out.to_triplets())
        assert torch.allclose(rebuilt.p_act, out.p_act.double(), atol=1e-6)


class TestCheckpoint:
    def test_round_trip_is_bit_exact(self, tmp_path, detector, toy_config):
        digest = save_checkpoint(tmp_path / "m.sia", detector)
        model, ckpt = load_detector(tmp_path / "m.sia", expected=toy_config)
        assert ckpt.digest == digest
        for name, tensor in detector.state_dict().items():
            assert torch.equal(tensor, model.state_dict()[name]), name

    def test_config_mismatch(self, tmp_path, detector):
        save_checkpoint(tmp_path / "m.sia", detector)
        with pytest.raises(CheckpointMismatchError):
            load_checkpoint(tmp_path / "m.sia", expected=ModelConfig(n_det_tokens=3))

    def test_bad_magic(self, tmp_path):
        (tmp_path / "x.sia").write_bytes(b"not a checkpoint at all")
        with pytest.raises(CheckpointMismatchError):
            load_checkpoint(tmp_path / "x.sia")

    def test_train_state_round_trip(self, tmp_path, detector, toy_config):
        params = [p for p in detector.parameters() if p.requires_grad]
        optimizer = torch.optim.AdamW(params, lr=1e-3)
        detector(_frames(toy_config)).boxes.sum().backward()
        optimizer.step()
        rng = np.random.default_rng(3)
        state = TrainState(
            step=1,
            optimizer=optimizer.state_dict(),
            rng=rng.bit_generator.state,
            torch_rng=torch.get_rng_state(),
            running={"total": 0.5},
        )
        save_checkpoint(tmp_path / "m.sia", detector, state)
        loaded = load_checkpoint(tmp_path / "m.sia").train_state
        assert loaded.step == 1 and loaded.running == {"total": 0.5}
        assert loaded.rng == rng.bit_generator.state
        assert torch.equal(loaded.torch_rng, torch.get_rng_state())
        fresh = torch.optim.AdamW(params, lr=1e-3)
        fresh.load_state_dict(loaded.optimizer)
        for k, v in optimizer.state_dict()["state"].items():
            assert torch.equal(fresh.state_dict()["state"][k]["exp_avg"], v["exp_avg"])

    def test_text_encoder_version_tracks_adapters(self, detector):
        before = detector.text_encoder_version()
        with torch.no_grad():
            detector.text.blocks[0].adapter.up.weight.fill_(0.1)
        assert detector.text_encoder_version() != before
