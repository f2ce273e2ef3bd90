import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fbsc.evaluation import (
    AUCUndefined,
    auc_score,
    concat_auc,
    emit_plots,
    format_sweep,
    horizon_sweep,
    roc_curve,
)
from fbsc.labels import AlignedPair


def pair_count_auc(scores, labels):
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    total = 0.0
    for p in pos:
        for n in neg:
            total += 1.0 if p > n else 0.5 if p == n else 0.0
    return total / (len(pos) * len(neg))


def pair(scores, labels, vid="v", alpha=0, dropped=0):
    return AlignedPair(vid, alpha, 0, dropped, np.asarray(scores, float), np.asarray(labels, np.uint8))


class TestConcatAUC:
    def test_perfect_separation(self):
        rep = concat_auc([pair([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1])])
        assert rep.auc == 1.0
        assert [0.0, 1.0] in rep.roc

    def test_twenty_frame_fixture(self):
        rng = np.random.default_rng(0)
        scores = rng.integers(0, 6, 20).astype(float)
        labels = np.array([0, 1] * 10)
        assert concat_auc([pair(scores, labels)]).auc == pytest.approx(pair_count_auc(scores, labels), abs=1e-12)

    def test_random_fixtures_match_pair_counting(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            pairs, all_s, all_y = [], [], []
            for v in range(rng.integers(1, 4)):
                n = int(rng.integers(3, 40))
                s = np.round(rng.random(n), 1)  # coarse rounding forces ties
                y = (rng.random(n) < 0.4).astype(int)
                pairs.append(pair(s, y, vid=f"v{v}"))
                all_s.append(s)
                all_y.append(y)
            s, y = np.concatenate(all_s), np.concatenate(all_y)
            if y.min() == y.max():
                continue
            assert concat_auc(pairs).auc == pytest.approx(pair_count_auc(s, y), abs=1e-12)

    def test_chance(self):
        rng = np.random.default_rng(2)
        y = (rng.random(100_000) < 0.3).astype(int)
        assert abs(concat_auc([pair(rng.random(100_000), y)]).auc - 0.5) <= 0.02

    def test_single_class(self):
        with pytest.raises(AUCUndefined, match="AUC undefined"):
            concat_auc([pair([0.1, 0.2], [0, 0])])

    def test_counts(self):
        rep = concat_auc([pair([0.1, 0.5], [0, 1], dropped=3), pair([0.2, 0.3, 0.4], [1, 0, 0], vid="w", dropped=2)])
        assert (rep.n_pos, rep.n_neg, rep.excluded_frames) == (2, 3, 5)
        assert rep.per_video_auc == {"v": 1.0, "w": 0.0}

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.integers(-1000, 1000), min_size=4, max_size=50), st.integers(0, 2**31))
    def test_monotone_transform_invariance(self, scores, seed):
        s = np.asarray(scores) / 100.0  # coarse grid so exp keeps distinct values distinct
        y = np.random.default_rng(seed).integers(0, 2, len(s))
        if y.min() == y.max():
            return
        base = auc_score(s, y)
        assert auc_score(np.exp(s / 5), y) == pytest.approx(base, abs=1e-12)
        assert auc_score(3 * s + 1, y) == pytest.approx(base, abs=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**31))
    def test_negation_complements(self, seed):
        rng = np.random.default_rng(seed)
        s = rng.random(30)  # continuous: no ties
        y = rng.integers(0, 2, 30)
        if y.min() == y.max():
            return
        assert auc_score(s, y) + auc_score(-s, y) == pytest.approx(1.0, abs=1e-12)


class TestRoc:
    def test_endpoints(self):
        fpr, tpr = roc_curve(np.array([0.3, 0.1, 0.7, 0.2]), np.array([1, 0, 1, 0]))
        assert (fpr[0], tpr[0]) == (0.0, 0.0)
        assert (fpr[-1], tpr[-1]) == (1.0, 1.0)
        assert np.trapezoid(tpr, fpr) == pytest.approx(1.0)


class TestHorizonSweep:
    def test_missing_alpha_is_absent(self):
        table = horizon_sweep({0: [pair([0.1, 0.9], [0, 1])]}, alphas=[0, 3])
        assert table[3] is None and table[0].auc == 1.0

    def test_empty(self):
        assert horizon_sweep({}) == {}

    def test_alpha_zero_equals_concat(self):
        p = [pair([0.3, 0.2, 0.6, 0.1], [0, 1, 1, 0])]
        assert horizon_sweep({0: p})[0].auc == concat_auc(p).auc

    def test_format(self):
        table = horizon_sweep({1: [pair([0.1, 0.9], [0, 1], alpha=1)]}, alphas=[1, 2])
        text = format_sweep({"f+b": table, "f-only": table})
        assert "100.0" in text and "-" in text.splitlines()[1]


class TestEmitPlots:
    def test_json_schema_and_byte_stability(self, tmp_path):
        rep = concat_auc([pair([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1])], dataset="toy")
        sweep = {"f+b": {a: rep for a in range(1, 7)}}
        first = emit_plots(rep, tmp_path / "a", sweeps=sweep)
        second = emit_plots(rep, tmp_path / "b", sweeps=sweep)
        for p, q in zip(first, second):
            assert p.read_bytes() == q.read_bytes(), p.name
        data = json.loads((tmp_path / "a" / "report_a0.json").read_text())
        assert {"dataset", "alpha", "auc", "n_pos", "n_neg", "excluded_frames", "roc"} <= set(data)
        summary = json.loads((tmp_path / "a" / "sweep.json").read_text())
        assert len(summary["f+b"]) == 6

    def test_unwritable(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        rep = concat_auc([pair([0.1, 0.9], [0, 1])])
        with pytest.raises(OSError):
            emit_plots(rep, blocker / "sub")
