import json
import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from logad.evaluate import (
    GRID_COLUMNS,
    EvalReport,
    TimingLog,
    auc_roc,
    best_f1,
    score_histogram,
)


def pairwise_auc(scores, labels):
    """O(n^2) oracle: fraction of (positive, negative) pairs ordered right."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    pos = s[y == 1]
    neg = s[y == 0]
    wins = (pos[:, None] > neg[None, :]).sum() + 0.5 * (pos[:, None] == neg[None, :]).sum()
    return wins / (len(pos) * len(neg))


class TestAucRoc:
    def test_hand_example(self):
        assert auc_roc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == pytest.approx(0.75)

    def test_perfect_separation(self):
        assert auc_roc([1, 2, 3, 9, 10], [0, 0, 0, 1, 1]) == 1.0

    def test_all_ties_half(self):
        assert auc_roc([5.0] * 6, [0, 1, 0, 1, 0, 1]) == 0.5

    def test_single_class_errors(self):
        with pytest.raises(ValueError):
            auc_roc([0.1, 0.2], [1, 1])
        with pytest.raises(ValueError):
            auc_roc([0.1, 0.2], [0, 0])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            auc_roc([0.1], [0, 1])

    def test_matches_pairwise_oracle(self):
        rng = np.random.default_rng(101)
        for _ in range(50):
            n = int(rng.integers(2, 200))
            labels = rng.integers(0, 2, size=n)
            if labels.min() == labels.max():
                labels[0] = 1 - labels[0]
            # low-resolution scores force plenty of ties
            scores = rng.integers(0, 8, size=n) / 4.0
            assert auc_roc(scores, labels) == pytest.approx(
                pairwise_auc(scores, labels), abs=1e-12
            )

    @given(st.integers(0, 2**32 - 1))
    def test_invariant_under_increasing_transforms(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(4, 60))
        labels = rng.integers(0, 2, size=n)
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        scores = rng.normal(size=n)
        base = auc_roc(scores, labels)
        for transform in (lambda s: 3 * s + 7, np.exp, lambda s: s**3):
            assert auc_roc(transform(scores), labels) == pytest.approx(base, abs=1e-12)


class TestBestF1:
    def test_perfect_ranking(self):
        thr, f1 = best_f1([0.1, 0.9], [0, 1])
        assert f1 == 1.0
        assert 0.1 < thr <= 0.9

    def test_inverted_ranking(self):
        thr, f1 = best_f1([0.9, 0.1], [0, 1])
        assert f1 == pytest.approx(2 / 3)
        assert thr == pytest.approx(0.1)  # predict everything anomalous

    def test_all_positive_labels(self):
        scores = [0.3, 0.7, 0.5]
        thr, f1 = best_f1(scores, [1, 1, 1])
        assert f1 == 1.0
        assert thr <= min(scores)

    def test_no_positive_labels_errors(self):
        with pytest.raises(ValueError):
            best_f1([0.1, 0.2], [0, 0])

    def test_smallest_optimal_threshold_wins(self):
        # thresholds 0.2 and 0.4 both give f1 = 1.0 here
        thr, f1 = best_f1([0.1, 0.2, 0.4], [0, 1, 1])
        assert f1 == 1.0
        assert thr == pytest.approx(0.2)

    def test_exact_geq_budgeted_and_budget_infinity_matches(self):
        rng = np.random.default_rng(55)
        for _ in range(30):
            n = int(rng.integers(3, 120))
            labels = rng.integers(0, 2, size=n)
            labels[0] = 1
            scores = np.round(rng.random(n), 2)
            _, exact = best_f1(scores, labels)
            for budget in (1, 3, 5, 20):
                _, capped = best_f1(scores, labels, budget=budget)
                assert exact >= capped - 1e-12
            _, unbounded = best_f1(scores, labels, budget=10**9)
            assert unbounded == exact

    def test_budget_twenty_usually_finds_optimum_on_smooth_data(self):
        rng = np.random.default_rng(56)
        scores = np.concatenate([rng.normal(0, 1, 300), rng.normal(4, 1, 40)])
        labels = np.concatenate([np.zeros(300, int), np.ones(40, int)])
        _, exact = best_f1(scores, labels)
        _, capped = best_f1(scores, labels, budget=20)
        assert capped >= 0.8 * exact

    def test_bad_budget(self):
        with pytest.raises(ValueError):
            best_f1([0.1], [1], budget=0)


class TestScoreHistogram:
    def test_two_bins(self):
        hist = score_histogram([0.0, 1.0], [0, 1], 2)
        assert hist.bins == [(0.0, 0.5, 1, 0), (0.5, 1.0, 0, 1)]

    def test_identical_scores_single_bin(self):
        hist = score_histogram([2.0, 2.0, 2.0], [0, 0, 1], 10)
        assert hist.bins == [(2.0, 2.0, 2, 1)]

    def test_counts_conserved(self):
        rng = np.random.default_rng(77)
        scores = rng.normal(size=1000)
        labels = rng.integers(0, 2, size=1000)
        hist = score_histogram(scores, labels, 50)
        assert len(hist.bins) == 50
        assert sum(nc + ac for _, _, nc, ac in hist.bins) == 1000
        assert sum(ac for _, _, _, ac in hist.bins) == labels.sum()

    def test_csv_emission(self, tmp_path):
        hist = score_histogram([0.0, 1.0], [0, 1], 2)
        out = tmp_path / "hist.csv"
        hist.write_csv(out)
        lines = out.read_text().splitlines()
        assert lines[0] == "bin_low,bin_high,normal_count,anomaly_count"
        assert len(lines) == 3

    def test_bad_bin_count(self):
        with pytest.raises(ValueError):
            score_histogram([1.0], [1], 0)


class TestTimingLog:
    def test_noop_nonnegative(self):
        tl = TimingLog()
        result, seconds = tl.timed("load", lambda: 42)
        assert result == 42
        assert seconds >= 0.0
        assert tl.stages["load"] == seconds

    def test_model_time_additivity(self):
        tl = TimingLog()
        tl.timed("fit", time.sleep, 0.01)
        tl.timed("score", time.sleep, 0.01)
        report = EvalReport(None, None, None, dict(tl.stages), None)
        assert report.model_time == pytest.approx(
            tl.stages["fit"] + tl.stages["score"], abs=1e-12
        )

    def test_stage_ids_free_form(self):
        tl = TimingLog()
        for stage in ("Load", "Normalize", "Create trigrams", "Create words", "Parse event IDs"):
            tl.timed(stage, lambda: None)
        assert len(tl.stages) == 5

    def test_stage_reuse_rejected(self):
        tl = TimingLog()
        tl.timed("fit", lambda: None)
        with pytest.raises(ValueError):
            tl.timed("fit", lambda: None)


class TestEvalReport:
    def _report(self):
        return EvalReport(
            auc=0.9,
            best_f1=0.5,
            best_threshold=0.25,
            timings={"load": 0.1, "fit": 0.2, "score": 0.3},
            histogram=score_histogram([0.0, 1.0], [0, 1], 2),
            meta={"dataset": "d", "representation": "words", "model": "rm", "scenario": "unfiltered"},
        )

    def test_json_round_trip(self):
        data = json.loads(self._report().to_json())
        assert data["auc"] == 0.9
        assert data["model_time"] == pytest.approx(0.5)
        assert data["meta"]["model"] == "rm"
        assert len(data["histogram"]) == 2

    def test_grid_row_aligns_with_columns(self):
        row = self._report().grid_row()
        assert len(row) == len(GRID_COLUMNS)
        assert row[:4] == ["d", "words", "rm", "unfiltered"]
        assert row[GRID_COLUMNS.index("model_s")] == repr(0.5)
