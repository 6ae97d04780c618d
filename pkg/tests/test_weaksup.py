"""Tests for NWS and AWS label expansion."""

import json
from types import SimpleNamespace

import numpy as np
import pytest
import torch

from sia.data.synthetic import generate_synthetic
from sia.models.annotations import DatasetManifest, FrameLocator, KeyframeAnnotation, ManifestEntry
from sia.models.boxes import BoxCXCYWH, BoxXYXY
from sia.models.detection import DetectionTriplet
from sia.detector.detector import build_detector
from sia.models.vocabulary import ActionClass, ActionVocabulary, DescriptorBank
from sia.vocab.bank import class_names_bank
from sia.weaksup import apply_record, aws_assign, nws_expand, run_refinement


def _annotation(n_boxes: int = 2, global_action="jump") -> KeyframeAnnotation:
    boxes = [BoxXYXY(x1=0.1 + 0.3 * j, y1=0.1, x2=0.3 + 0.3 * j, y2=0.5) for j in range(n_boxes)]
    return KeyframeAnnotation(
        clip_id="c",
        boxes=boxes,
        action_sets=[["walk"] if j % 2 == 0 else ["stand", "walk"] for j in range(n_boxes)],
        global_action=global_action,
    )


def _triplets_on_boxes(ann: KeyframeAnnotation, embeddings) -> list:
    out = []
    for box, e in zip(ann.boxes, embeddings):
        cx, cy = (box.x1 + box.x2) / 2, (box.y1 + box.y2) / 2
        w, h = box.x2 - box.x1, box.y2 - box.y1
        out.append(DetectionTriplet(box=BoxCXCYWH(cx=cx, cy=cy, w=w, h=h), p_act=0.9, e_v=list(e)))
    return out


def _jump_bank() -> DescriptorBank:
    bank = DescriptorBank(descriptors={"jump": ["jump"]})
    bank.set_embeddings({"jump": torch.tensor([[1.0, 0.0]], dtype=torch.float64)}, "test")
    return bank


def _unit(similarity: float):
    return [similarity, float(np.sqrt(1.0 - similarity**2))]


class TestNws:
    def test_every_box_gets_global_action(self):
        record = nws_expand(_annotation(3))
        assert record.pseudo_actions == [["jump"]] * 3
        assert record.assigned_boxes == [0, 1, 2]

    def test_monotone_and_idempotent(self):
        ann = _annotation(3)
        entry = ManifestEntry(clip_id="c", source=FrameLocator(path="x"), annotation=ann)
        once = apply_record(entry, nws_expand(ann))
        merged = once.training_annotation()
        for before, after in zip(ann.action_sets, merged.action_sets):
            assert set(before) <= set(after)
        again = apply_record(
            entry.model_copy(update={"annotation": merged}), nws_expand(merged)
        ).training_annotation()
        assert again.action_sets == merged.action_sets

    def test_no_global_action_is_skipped(self):
        record = nws_expand(_annotation(2, global_action=None))
        assert record.skipped and record.warning == "no global action"


class TestAws:
    def test_highest_similarity_box_wins(self):
        ann = _annotation(2)
        triplets = _triplets_on_boxes(ann, [_unit(0.1), _unit(0.9)])
        record = aws_assign(ann, triplets, _jump_bank(), top_k=1)
        assert record.pseudo_actions == [[], ["jump"]]
        assert record.similarity == pytest.approx(0.9)
        assert record.similarities == pytest.approx([0.1, 0.9])

    @pytest.mark.parametrize("top_k", [1, 2, 3, 5])
    def test_assigns_min_of_top_k_and_boxes(self, top_k):
        ann = _annotation(3)
        triplets = _triplets_on_boxes(ann, [_unit(0.2), _unit(0.5), _unit(0.4)])
        record = aws_assign(ann, triplets, _jump_bank(), top_k=top_k)
        assert len(record.assigned_boxes) == min(top_k, 3)

    def test_single_box_always_labelled(self):
        ann = _annotation(1)
        record = aws_assign(ann, _triplets_on_boxes(ann, [_unit(-0.5)]), _jump_bank())
        assert record.pseudo_actions == [["jump"]]

    def test_ties_go_to_lower_box(self):
        ann = _annotation(3)
        triplets = _triplets_on_boxes(ann, [_unit(0.3), _unit(0.7), _unit(0.7)])
        record = aws_assign(ann, triplets, _jump_bank(), top_k=1)
        assert record.assigned_boxes == [1]

    def test_similarity_gate(self):
        ann = _annotation(2)
        triplets = _triplets_on_boxes(ann, [_unit(0.1), _unit(0.2)])
        record = aws_assign(ann, triplets, _jump_bank(), top_k=2, min_similarity=0.15)
        assert record.assigned_boxes == [1]

    def test_unmatched_boxes_warn(self):
        ann = _annotation(3)
        triplets = _triplets_on_boxes(ann, [_unit(0.5)])
        record = aws_assign(ann, triplets, _jump_bank(), top_k=3)
        assert record.assigned_boxes == [0]
        assert record.similarities[1:] == [None, None]
        assert "2 boxes unmatched" in record.warning

    def test_no_boxes_skipped(self):
        ann = KeyframeAnnotation(clip_id="c", global_action="jump")
        record = aws_assign(ann, _triplets_on_boxes(_annotation(1), [_unit(0.5)]), _jump_bank())
        assert record.skipped

    def test_invalid_top_k(self):
        ann = _annotation(1)
        with pytest.raises(ValueError):
            aws_assign(ann, _triplets_on_boxes(ann, [_unit(0.5)]), _jump_bank(), top_k=0)

    def test_global_action_by_external_id(self):
        vocab = ActionVocabulary(
            classes=[
                ActionClass(id=0, name="walk", external_id="14"),
                ActionClass(id=1, name="jump", external_id="17"),
            ]
        )
        ann = _annotation(2, global_action="17")
        triplets = _triplets_on_boxes(ann, [_unit(0.2), _unit(0.9)])
        record = aws_assign(ann, triplets, _jump_bank(), top_k=1, vocab=vocab)
        assert record.success
        assert record.global_action == "jump"
        assert record.pseudo_actions == [[], ["jump"]]


@pytest.fixture
def global_dataset(synth_config):
    """Three global-action clips followed by three plain ones."""
    global_config = synth_config.model_copy(update={"global_fraction": 1.0})
    with_global = generate_synthetic(seed=3, n_clips=3, config=global_config)
    plain = generate_synthetic(seed=4, n_clips=3, config=synth_config)
    manifest = with_global.manifest.model_copy(
        update={"entries": with_global.manifest.entries + plain.manifest.entries}
    )
    return SimpleNamespace(manifest=manifest, vocabulary=with_global.vocabulary, owners=with_global.owners)


class TestRunRefinement:
    def test_nws_never_needs_a_model(self, global_dataset):
        result = run_refinement(global_dataset.manifest, "NWS")
        assert not result.failed
        assert len(result.records) == len(global_dataset.owners)

    def test_clips_without_global_action_pass_through(self, global_dataset):
        result = run_refinement(global_dataset.manifest, "NWS")
        for before, after in zip(global_dataset.manifest.entries, result.manifest.entries):
            if before.annotation.global_action is None:
                assert after == before
            else:
                assert after.provenance.method == "NWS"
                assert after.annotation == before.annotation

    def test_aws_rerun_is_byte_identical(self, global_dataset, detector):
        bank = class_names_bank(global_dataset.vocabulary)
        first = run_refinement(global_dataset.manifest, "AWS", detector, bank, top_k=1, checkpoint_hash="h")
        second = run_refinement(global_dataset.manifest, "AWS", detector, bank, top_k=1, checkpoint_hash="h")
        assert first.manifest.model_dump_json() == second.manifest.model_dump_json()
        for entry in first.manifest.entries:
            if entry.annotation.global_action is not None:
                assert sum(1 for p in entry.pseudo_actions if p) == 1
                assert entry.provenance.checkpoint_hash == "h"

    def test_log_resumes(self, tmp_path, global_dataset):
        log = tmp_path / "refine.jsonl"
        first = run_refinement(global_dataset.manifest, "NWS", log_path=log)
        lines = log.read_text().splitlines()
        assert [json.loads(line)["clip_id"] for line in lines] == [r.clip_id for r in first.records]
        second = run_refinement(global_dataset.manifest, "NWS", log_path=log)
        assert log.read_text().splitlines() == lines
        assert second.manifest == first.manifest

    def test_aws_log_from_another_checkpoint_is_not_reused(self, tmp_path, global_dataset, detector, toy_config):
        log = tmp_path / "aws.jsonl"
        other = build_detector(toy_config, seed=123).eval()
        vocab = global_dataset.vocabulary
        run_refinement(
            global_dataset.manifest, "AWS", detector, class_names_bank(vocab), checkpoint_hash="A", log_path=log
        )
        resumed = run_refinement(
            global_dataset.manifest, "AWS", other, class_names_bank(vocab), checkpoint_hash="B", log_path=log
        )
        fresh = run_refinement(global_dataset.manifest, "AWS", other, class_names_bank(vocab), checkpoint_hash="B")
        assert resumed.manifest == fresh.manifest
        assert [r.similarities for r in resumed.records] == [r.similarities for r in fresh.records]
        assert all(r.checkpoint_hash == "B" for r in resumed.records)

    def test_aws_log_with_other_top_k_is_not_reused(self, tmp_path, global_dataset, detector):
        log = tmp_path / "aws.jsonl"
        bank = class_names_bank(global_dataset.vocabulary)
        run_refinement(global_dataset.manifest, "AWS", detector, bank, top_k=1, checkpoint_hash="h", log_path=log)
        resumed = run_refinement(
            global_dataset.manifest, "AWS", detector, bank, top_k=2, checkpoint_hash="h", log_path=log
        )
        fresh = run_refinement(global_dataset.manifest, "AWS", detector, bank, top_k=2, checkpoint_hash="h")
        assert resumed.manifest == fresh.manifest
        assert all(r.top_k == 2 for r in resumed.records)

    def test_aws_log_with_same_settings_is_reused(self, tmp_path, global_dataset, detector):
        log = tmp_path / "aws.jsonl"
        bank = class_names_bank(global_dataset.vocabulary)
        run_refinement(global_dataset.manifest, "AWS", detector, bank, checkpoint_hash="h", log_path=log)
        lines = log.read_text().splitlines()
        run_refinement(global_dataset.manifest, "AWS", detector, bank, checkpoint_hash="h", log_path=log)
        assert log.read_text().splitlines() == lines

    def test_failed_clip_is_recorded_and_left_alone(self, detector):
        ann = _annotation(2)
        entry = ManifestEntry(
            clip_id="c", source=FrameLocator(kind="memory", path="missing/clip"), annotation=ann
        )
        manifest = DatasetManifest(vocabulary_ref="v.json", entries=[entry])
        result = run_refinement(manifest, "AWS", detector, _jump_bank_for(detector))
        assert len(result.failed) == 1
        assert result.failed[0].error
        assert result.manifest.entries[0] == entry


def _jump_bank_for(detector) -> DescriptorBank:
    bank = DescriptorBank(descriptors={"jump": ["jump"]})
    bank.set_embeddings({"jump": detector.encode_texts(["jump"]).detach()}, detector.text_encoder_version())
    return bank
