"""Tests for annotation parsers, filters, manifests, sampling and synthetic clips."""

import json

import numpy as np
import pytest

from sia.data.ava import (
    attach_global_actions,
    parse_ava_csv,
    parse_global_sidecar,
    serialize_ava_csv,
)
from sia.data.clip import Clip
from sia.data.filters import apply_blocklist, canonicalize_labels
from sia.data.manifest import build_manifest, load_manifest, manifest_to_json, save_manifest
from sia.data.sampling import clip_frame_indices, sample_clip_frames
from sia.data.synthetic import PALETTE, generate_synthetic, synthetic_vocabulary
from sia.data.tubes import parse_tube_annotations
from sia.errors import ConfigurationError, DataValidationError, ParseError, UnknownClassError
from sia.models.annotations import FrameLocator, KeyframeAnnotation
from sia.models.boxes import BoxXYXY
from sia.models.config import SynthConfig
from sia.models.vocabulary import ActionClass, ActionVocabulary
from sia.sources.memory import MemoryFrameStore
from sia.sources.raw import write_raw_frames

AVA_SAMPLE = """\
vid1,0902,0.1,0.2,0.4,0.9,12,0
vid1,0902,0.1,0.2,0.4,0.9,80,0
vid1,0902,0.5,0.1,0.8,0.7,12,1
vid2,0905,0.0,0.0,1.0,1.0,14,3
"""


class TestAvaCsv:
    def test_groups_and_merges(self):
        anns = parse_ava_csv(AVA_SAMPLE)
        assert [a.clip_id for a in anns] == ["vid1_0902", "vid2_0905"]
        first = anns[0]
        assert first.num_boxes == 2
        assert first.action_sets == [["12", "80"], ["12"]]
        assert first.person_ids == ["0", "1"]

    def test_round_trip(self):
        anns = parse_ava_csv(AVA_SAMPLE)
        again = parse_ava_csv(serialize_ava_csv(anns))
        assert again == anns

    def test_wrong_field_count_reports_line(self):
        with pytest.raises(ParseError) as err:
            parse_ava_csv("vid1,0902,0.1,0.2,0.4,0.9,12,0\nvid1,0902,0.1\n")
        assert err.value.line == 2

    def test_out_of_range_coordinate(self):
        with pytest.raises(DataValidationError, match="line 1"):
            parse_ava_csv("vid1,0902,0.1,0.2,1.4,0.9,12,0\n")

    def test_person_with_two_boxes_rejected(self):
        with pytest.raises(DataValidationError):
            parse_ava_csv("v,1,0.1,0.1,0.2,0.2,1,7\nv,1,0.3,0.3,0.4,0.4,2,7\n")

    def test_global_sidecar(self):
        sidecar = parse_global_sidecar("vid1_0902,cracking back\n")
        anns = attach_global_actions(parse_ava_csv(AVA_SAMPLE), sidecar)
        assert anns[0].global_action == "cracking back"
        assert anns[1].global_action is None

    def test_conflicting_sidecar(self):
        with pytest.raises(ParseError):
            parse_global_sidecar("a,x\na,y\n")


class TestFilters:
    def _ann(self):
        return KeyframeAnnotation(
            clip_id="c",
            boxes=[BoxXYXY(x1=0, y1=0, x2=0.5, y2=0.5), BoxXYXY(x1=0.5, y1=0.5, x2=1, y2=1)],
            action_sets=[["ride horse"], ["ride horse", "walk"]],
        )

    def test_blocklist_drops_emptied_boxes(self):
        (out,) = apply_blocklist([self._ann()], ["ride horse"])
        assert out.num_boxes == 1
        assert out.action_sets == [["walk"]]

    def test_blocklist_keeps_unlabelled_actors(self):
        ann = self._ann().model_copy(update={"action_sets": [[], ["ride horse", "walk"]]})
        (out,) = apply_blocklist([ann], ["ride horse"])
        assert out.num_boxes == 2
        assert out.action_sets == [[], ["walk"]]

    def test_canonicalize_by_external_id(self):
        vocab = ActionVocabulary(
            classes=[ActionClass(id=0, name="stand", external_id="12"), ActionClass(id=1, name="talk", external_id="80")]
        )
        (ann,) = canonicalize_labels(parse_ava_csv(AVA_SAMPLE)[:1], vocab)
        assert ann.action_sets == [["stand", "talk"], ["stand"]]

    def test_canonicalize_names_every_unknown(self):
        vocab = ActionVocabulary.from_names(["stand"])
        with pytest.raises(UnknownClassError) as err:
            canonicalize_labels(parse_ava_csv(AVA_SAMPLE), vocab)
        assert "12" in str(err.value) and "14" in str(err.value)


class TestTubes:
    DOC = {
        "videos": {
            "v": [
                {"action": "jump", "frames": [{"index": 0, "box": [0.0, 0.0, 0.2, 0.2]}, {"index": 4, "box": [0.4, 0.4, 0.6, 0.6]}]}
            ]
        }
    }

    def test_interpolates_between_annotated_frames(self):
        (ann,) = parse_tube_annotations(self.DOC, keyframes={"v": [2]})
        assert ann.clip_id == "v_2"
        assert ann.boxes[0].as_tuple() == pytest.approx((0.2, 0.2, 0.4, 0.4))
        assert ann.action_sets == [["jump"]]

    def test_eval_mode_uses_annotated_frames(self):
        anns = parse_tube_annotations(json.dumps(self.DOC), mode="eval")
        assert [a.clip_id for a in anns] == ["v_0", "v_4"]

    def test_train_mode_is_seeded(self):
        a = parse_tube_annotations(self.DOC, mode="train", seed=3)
        b = parse_tube_annotations(self.DOC, mode="train", seed=3)
        assert len(a) == 1 and a == b

    def test_non_increasing_indices(self):
        doc = {"v": [{"action": "x", "frames": [{"index": 3, "box": [0, 0, 1, 1]}, {"index": 3, "box": [0, 0, 1, 1]}]}]}
        with pytest.raises(DataValidationError):
            parse_tube_annotations(doc)


class TestSampling:
    def test_indices_centred_and_clamped(self):
        assert clip_frame_indices(keyframe=10, num_frames=40, T=4, stride=4) == [2, 6, 10, 14]
        assert clip_frame_indices(keyframe=1, num_frames=5, T=4, stride=2) == [0, 0, 1, 3]

    def test_memory_source(self):
        frames = np.random.default_rng(0).random((9, 8, 8, 3), dtype=np.float32)
        locator = MemoryFrameStore.put("t/clip", frames)
        clip = sample_clip_frames(locator, T=4, stride=2)
        assert isinstance(clip, Clip)
        assert clip.keyframe_index == 2
        np.testing.assert_array_equal(clip.keyframe, frames[4])

    def test_raw_source_relative_to_root(self, tmp_path):
        frames = np.random.default_rng(1).random((6, 8, 8, 3), dtype=np.float32)
        write_raw_frames(tmp_path / "frames" / "a.raw", frames)
        locator = FrameLocator(kind="raw", path="frames/a.raw", keyframe=1)
        clip = sample_clip_frames(locator, T=2, stride=1, root=tmp_path)
        np.testing.assert_array_equal(clip.frames, frames[[0, 1]])

    def test_single_frame_clip(self):
        assert clip_frame_indices(keyframe=5, num_frames=10, T=1, stride=4) == [5]
        frames = np.random.default_rng(2).random((10, 8, 8, 3), dtype=np.float32)
        locator = MemoryFrameStore.put("t/single", frames).model_copy(update={"keyframe": 5})
        clip = sample_clip_frames(locator, T=1, stride=4)
        assert clip.frames.shape == (1, 8, 8, 3)
        assert clip.keyframe_index == 0
        np.testing.assert_array_equal(clip.keyframe, frames[5])

    def test_first_frame_keyframe_repeats_on_the_left(self):
        assert clip_frame_indices(keyframe=0, num_frames=10, T=4, stride=2) == [0, 0, 0, 2]
        frames = np.random.default_rng(3).random((10, 8, 8, 3), dtype=np.float32)
        locator = MemoryFrameStore.put("t/first", frames).model_copy(update={"keyframe": 0})
        clip = sample_clip_frames(locator, T=4, stride=2)
        for t in range(3):
            np.testing.assert_array_equal(clip.frames[t], frames[0])
        np.testing.assert_array_equal(clip.keyframe, frames[0])

    def test_last_frame_keyframe_repeats_on_the_right(self):
        assert clip_frame_indices(keyframe=9, num_frames=10, T=4, stride=2) == [5, 7, 9, 9]

    def test_keyframe_beyond_source(self):
        locator = MemoryFrameStore.put("t/short", np.zeros((2, 4, 4, 3), dtype=np.float32))
        with pytest.raises(OSError):
            sample_clip_frames(locator.model_copy(update={"keyframe": 5}), T=2, stride=1)

    def test_unknown_kind(self):
        with pytest.raises(OSError):
            sample_clip_frames(FrameLocator(kind="nope", path="x"), T=2, stride=1)


class TestManifest:
    def test_save_load_byte_stable(self, tmp_path):
        anns = parse_ava_csv(AVA_SAMPLE)
        manifest = build_manifest(anns, "vocabulary.json")
        save_manifest(manifest, tmp_path / "m.json")
        loaded = load_manifest(tmp_path / "m.json")
        assert manifest_to_json(loaded) == (tmp_path / "m.json").read_text()

    def test_rejects_bad_schema(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text(json.dumps({"schema_version": "9", "vocabulary_ref": "v.json", "entries": []}))
        with pytest.raises(DataValidationError):
            load_manifest(path)


class TestSynthetic:
    def test_deterministic(self, synth_config):
        a = generate_synthetic(5, 3, synth_config)
        b = generate_synthetic(5, 3, synth_config)
        assert manifest_to_json(a.manifest) == manifest_to_json(b.manifest)
        for clip_id in a.clips:
            np.testing.assert_array_equal(a.clips[clip_id], b.clips[clip_id])

    def test_labels_in_vocabulary(self, synth_dataset):
        names = set(synth_dataset.vocabulary.names)
        for ann in synth_dataset.manifest.annotations():
            assert ann.labels() <= names
            assert 1 <= ann.num_boxes <= 3

    def test_global_clips_have_one_owner(self):
        config = SynthConfig(global_fraction=1.0, min_actors=2, max_actors=3)
        data = generate_synthetic(1, 6, config)
        for entry in data.manifest.entries:
            ann = entry.annotation
            owner = data.owners[entry.clip_id]
            colour = ann.global_action.removesuffix("_global")
            assert ann.action_sets[owner][0].startswith(colour + "_")
            others = [s[0] for i, s in enumerate(ann.action_sets) if i != owner]
            assert not any(label.startswith(colour + "_") for label in others)
        assert "red_global" in synthetic_vocabulary(config).names

    def test_save_round_trip(self, tmp_path, synth_dataset):
        manifest_path = synth_dataset.save(tmp_path)
        manifest = load_manifest(manifest_path)
        entry = manifest.entries[0]
        clip = sample_clip_frames(entry.source, T=4, stride=4, root=tmp_path)
        np.testing.assert_array_equal(clip.frames, synth_dataset.clips[entry.clip_id])

    def test_drawn_rectangles_match_boxes(self, synth_config):
        config = synth_config.model_copy(update={"global_fraction": 1.0})
        data = generate_synthetic(7, 6, config)
        size = config.image_size
        for entry in data.manifest.entries:
            keyframe = data.clips[entry.clip_id][entry.source.keyframe]
            for box, actor in zip(entry.annotation.boxes, data.actors[entry.clip_id]):
                colour = np.asarray(PALETTE[actor.color], dtype=np.float32)
                ys, xs = np.nonzero(np.all(keyframe == colour, axis=-1))
                assert abs(xs.min() / size - box.x1) <= 1 / size
                assert abs((xs.max() + 1) / size - box.x2) <= 1 / size
                assert abs(ys.min() / size - box.y1) <= 1 / size
                assert abs((ys.max() + 1) / size - box.y2) <= 1 / size

    def test_single_actor_config(self, synth_config):
        config = synth_config.model_copy(update={"min_actors": 1, "max_actors": 1})
        data = generate_synthetic(2, 20, config)
        assert all(ann.num_boxes == 1 for ann in data.manifest.annotations())

    def test_every_local_class_appears(self, synth_config):
        data = generate_synthetic(3, 200, synth_config)
        seen = set().union(*(ann.labels() for ann in data.manifest.annotations()))
        assert seen == set(synthetic_vocabulary(synth_config).names)

    def test_release_evicts_frames(self, synth_config):
        data = generate_synthetic(4, 3, synth_config)
        keep = MemoryFrameStore.put("t/other", np.zeros((1, 4, 4, 3), dtype=np.float32))
        assert len(MemoryFrameStore.keys()) == 4
        assert data.release() == 3
        assert MemoryFrameStore.keys() == [keep.path]
        with pytest.raises(OSError):
            sample_clip_frames(data.manifest.entries[0].source, T=4, stride=1)

    def test_regenerating_does_not_grow_store(self, synth_config):
        generate_synthetic(4, 3, synth_config)
        generate_synthetic(4, 3, synth_config)
        assert len(MemoryFrameStore.keys()) == 3

    def test_unknown_colour(self):
        with pytest.raises(ConfigurationError):
            generate_synthetic(0, 1, SynthConfig(colors=["purple"]))
