import json
from pathlib import Path

import numpy as np
import pytest

from fbsc import corpus, synthgen
from fbsc.synthgen import Anomaly, SceneRule, ScenarioSpec, SpriteType

CHECKSUMS = Path(__file__).parent / "fixtures" / "benchmark_checksums.json"


def small_spec(anomalies=(), frames=24):
    sprites = {"a": SpriteType("circle", (1, 0, 0), 4.0), "b": SpriteType("square", (0, 0, 1), 4.0),
               "odd": SpriteType("cross", (1, 1, 1), 4.0)}
    rules = [SceneRule(["a"], (0.5, 1.0)), SceneRule(["b"], (0.5, 1.0))]
    return ScenarioSpec("small", 2, frames, resolution=48, train_videos=1, test_videos=2, objects=2,
                        sprites=sprites, rules=rules, anomalies=list(anomalies), seed=4)


class TestGenerate:
    def test_byte_identical_reruns(self, tmp_path):
        spec = small_spec([Anomaly("test_s0_00", 5, 15, "appearance", sprite="odd")])
        synthgen.generate(spec, tmp_path / "a")
        synthgen.generate(spec, tmp_path / "b")
        assert synthgen.tree_checksum(tmp_path / "a") == synthgen.tree_checksum(tmp_path / "b")

    def test_no_anomalies_all_zero_labels(self, tmp_path):
        synthgen.generate(small_spec(), tmp_path / "g")
        clips = corpus.load_dataset(tmp_path / "g", "test")
        assert len(clips) == 4 and all(not c.labels.any() for c in clips)

    def test_corpus_layout_and_spec_json(self, tmp_path):
        spec = small_spec([Anomaly("test_s1_01", 3, 9, "speed", obj=1, factor=3.0)])
        synthgen.generate(spec, tmp_path / "g")
        assert corpus.label_files(tmp_path / "g", "train") == []
        back = ScenarioSpec.from_dict(json.loads((tmp_path / "g" / "spec.json").read_text()))
        assert back == spec
        clip = {c.video_id: c for c in corpus.load_dataset(tmp_path / "g", "test")}["test_s1_01"]
        np.testing.assert_array_equal(np.flatnonzero(clip.labels), np.arange(3, 9))

    def test_boxes_tightly_bound_rendered_sprites(self):
        spec = small_spec()
        truth = synthgen.simulate(spec, "train_s0_00")
        bg = synthgen.scene_background(spec, 0)
        for t in (0, 7, 19):
            frame, boxes = synthgen.render_frame(spec, truth, t, bg)
            for k, (x1, y1, x2, y2) in boxes:
                mask = synthgen.sprite_mask(spec.sprites[truth.kind[t][k]], *truth.pos[t, k], 48, 48)
                ys, xs = np.nonzero(mask)
                assert (x1, y1, x2, y2) == (xs.min(), ys.min(), xs.max() + 1, ys.max() + 1)
                colour = np.rint(np.asarray(spec.sprites[truth.kind[t][k]].color) * 255)
                # the box rows and columns at its edges contain sprite pixels
                assert (frame[y1:y2, x1:x2] == colour).all(axis=-1).any(axis=0).all()


class TestValidation:
    def test_span_outside_video(self):
        with pytest.raises(ValueError, match="outside video length"):
            small_spec([Anomaly("test_s0_00", 20, 30, "appearance", sprite="odd")]).validate()

    def test_training_videos_stay_normal(self):
        with pytest.raises(ValueError, match="not a test video"):
            small_spec([Anomaly("train_s0_00", 1, 5, "appearance", sprite="odd")]).validate()

    def test_anomaly_must_break_a_rule(self):
        with pytest.raises(ValueError, match="normal in the scene"):
            small_spec([Anomaly("test_s0_00", 1, 5, "scene", sprite="a")]).validate()
        with pytest.raises(ValueError, match="normal in some scene"):
            small_spec([Anomaly("test_s0_00", 1, 5, "appearance", sprite="b")]).validate()
        with pytest.raises(ValueError, match="speed factor"):
            small_spec([Anomaly("test_s0_00", 1, 5, "speed", factor=1.5)]).validate()


class TestRuleEngine:
    @pytest.mark.parametrize("name", ["basic", "scenedep", "anticipate"])
    def test_rule_labels_equal_schedule(self, name):
        spec = synthgen.benchmark(name)
        for vid in spec.video_ids("train") + spec.video_ids("test"):
            truth = synthgen.simulate(spec, vid)
            np.testing.assert_array_equal(synthgen.rule_labels(spec, truth), truth.labels, err_msg=vid)

    def test_scene_dependence(self):
        # sprite "a" is normal in scene 0 and anomalous in scene 1 under the same motion rule
        spec = small_spec([Anomaly("test_s1_00", 0, 24, "scene", sprite="a")])
        normal = synthgen.simulate(spec, "test_s0_00")
        abnormal = synthgen.simulate(spec, "test_s1_00")
        assert any("a" in row for row in normal.kind) and not normal.labels.any()
        assert abnormal.labels.all()
        assert (synthgen.rule_labels(spec, abnormal) == 1).all()


class TestStandardBenchmarks:
    def test_names(self):
        assert [s.name for s in synthgen.standard_benchmarks()] == ["basic", "scenedep", "anticipate"]
        for spec in synthgen.standard_benchmarks():
            spec.validate()

    def test_basic_kinds(self):
        spec = synthgen.benchmark("basic")
        assert spec.scene_count == 2 and {a.kind for a in spec.anomalies} == {"appearance", "speed"}

    def test_scenedep_anomalies_are_normal_elsewhere(self):
        spec = synthgen.benchmark("scenedep")
        assert spec.scene_count == 4 and {a.kind for a in spec.anomalies} == {"scene"}
        motions = {(r.motion, r.speed) for r in spec.rules}
        assert len(motions) == 1  # one shared motion rule, so only the sprite/scene pairing is abnormal
        for a in spec.anomalies:
            here = spec.scene_of(a.video)
            assert any(a.sprite in r.allowed for s, r in enumerate(spec.rules) if s != here)

    def test_anticipate_precursors(self):
        spec = synthgen.benchmark("anticipate")
        for a in spec.anomalies:
            truth = synthgen.simulate(spec, a.video)
            first = truth.precursor_start[a.obj]
            assert a.start - first >= 2 * spec.stride
            vy = truth.vel[:, a.obj, 1]
            assert (vy[:first] == 0).all() and (vy[first : a.start] != 0).all()
            assert truth.labels[a.start - 1] == 0 and truth.labels[a.start] == 1
            assert synthgen.min_precursor_frames(spec, a) >= 2 * spec.stride

    def test_unknown_name(self):
        with pytest.raises(KeyError):
            synthgen.benchmark("nope")

    @pytest.mark.slow
    def test_published_checksums(self, tmp_path):
        expected = json.loads(CHECKSUMS.read_text())
        for spec in synthgen.standard_benchmarks():
            synthgen.generate(spec, tmp_path / spec.name)
            assert synthgen.tree_checksum(tmp_path / spec.name) == expected[spec.name], spec.name


class TestSceneClassifier:
    def test_four_scenes_held_out(self, tmp_path):
        from fbsc import pipeline
        from fbsc.train import Trainer, scene_accuracy

        spec = synthgen.benchmark("scenedep")
        spec.frames, spec.train_videos, spec.test_videos, spec.anomalies = 40, 1, 1, []
        synthgen.generate(spec, tmp_path / "g")
        cfg = pipeline.benchmark_config("scenedep", tmp_path / "g", tmp_path / "run")
        cfg.optim.scene_epochs = 10  # the reduced corpus gives few batches per epoch
        trainer = Trainer(cfg)
        trainer.pretrain_scene_encoder()
        # held out: the test split, never seen by the classifier
        clips = corpus.load_dataset(tmp_path / "g", "test", with_labels=False)
        bank = corpus.CropBank(clips, corpus.load_scenes(tmp_path / "g"), trainer.data.mean_color,
                               cfg.model.crop_size, cfg.crop.margin, cfg.crop.min_side)
        crops, labels = [], []
        for c in clips:
            for tc in bank.tracks[c.video_id].values():
                crops.append(tc.scenes)
                labels.append(np.full(len(tc.scenes), trainer.data.scene_ids.index(c.scene_id)))
        acc = scene_accuracy(trainer.model, np.concatenate(crops), np.concatenate(labels))
        assert len(trainer.data.scene_ids) == 4
        assert acc >= 0.95, acc
