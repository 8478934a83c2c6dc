import csv
import json
from pathlib import Path

import numpy as np
import pytest

from logad.cli import main
from logad.ingest import SplitMode, SplitSpec, load, split
from logad.normalize import normalize_message
from logad.pipeline import ConfigError, RunConfig, execute, grid_cells, run, run_grid, run_repeats
from logad.synth import gen_synthetic


@pytest.fixture(scope="module")
def unseen_corpus(tmp_path_factory):
    path = tmp_path_factory.mktemp("corpus") / "unseen.log"
    return gen_synthetic(path, n_normal=600, n_anomalies=30, n_templates=10,
                         anomaly_kind="unseen_token", seed=5)


def _config(corpus, **overrides):
    defaults = dict(
        input=Path(corpus),
        adapter="bgl",
        representation="words",
        model="rm",
        scenario="normal_only",
        train_fraction=0.2,
        seed=1,
    )
    defaults.update(overrides)
    return RunConfig(**defaults)


class TestGenSynthetic:
    def test_all_normal_file(self, tmp_path):
        p = gen_synthetic(tmp_path / "n.log", 1000, 0, 20, "unseen_token", seed=2)
        lines = p.read_text().splitlines()
        assert len(lines) == 1000
        assert all(line.startswith("- ") for line in lines)

    def test_unseen_anomalies_have_oov_token(self, tmp_path):
        p = gen_synthetic(tmp_path / "u.log", 500, 40, 10, "unseen_token", seed=3)
        normal_tokens = set()
        anomaly_docs = []
        for line in p.read_text().splitlines():
            msg = normalize_message(line.split(maxsplit=9)[9])
            if line.startswith("- "):
                normal_tokens.update(msg.split())
            else:
                anomaly_docs.append(msg.split())
        assert anomaly_docs
        assert all(any(t not in normal_tokens for t in doc) for doc in anomaly_docs)

    def test_rare_anomalies_reuse_normal_pool(self, tmp_path):
        p = gen_synthetic(tmp_path / "r.log", 500, 40, 10, "rare_token", seed=3)
        normal_tokens = set()
        anomaly_docs = []
        for line in p.read_text().splitlines():
            msg = normalize_message(line.split(maxsplit=9)[9])
            if line.startswith("- "):
                normal_tokens.update(msg.split())
            else:
                anomaly_docs.append(msg.split())
        assert all(all(t in normal_tokens for t in doc) for doc in anomaly_docs)

    def test_fixed_seed_identical_file(self, tmp_path):
        a = gen_synthetic(tmp_path / "a.log", 100, 10, 5, "rare_token", seed=9)
        b = gen_synthetic(tmp_path / "b.log", 100, 10, 5, "rare_token", seed=9)
        assert a.read_bytes() == b.read_bytes()

    def test_validation(self, tmp_path):
        with pytest.raises(ValueError):
            gen_synthetic(tmp_path / "x.log", 0, 1, 5, "rare_token", seed=0)
        with pytest.raises(ValueError):
            gen_synthetic(tmp_path / "x.log", 10, -1, 5, "rare_token", seed=0)
        with pytest.raises(ValueError):
            gen_synthetic(tmp_path / "x.log", 10, 1, 5, "weird_kind", seed=0)


class TestRun:
    def test_report_shape(self, unseen_corpus, tmp_path):
        report = run(_config(unseen_corpus, out_dir=tmp_path / "out"))
        assert 0.0 <= report.auc <= 1.0
        assert 0.0 <= report.best_f1 <= 1.0
        for stage in ("load", "normalize", "split", "filter", "represent",
                      "vectorize", "fit", "score"):
            assert stage in report.timings
        assert "sample" not in report.timings  # fraction 1.0 skips the stage
        assert report.meta["f1_label_assisted"] is True
        assert report.meta["params"]["train_fraction"] == 0.2
        out = tmp_path / "out"
        assert (out / "report.json").exists()
        assert (out / "grid.csv").exists()
        assert any(out.glob("hist_*.csv"))

    def test_sample_stage_recorded_when_requested(self, unseen_corpus):
        report = run(_config(unseen_corpus, sample_fraction=0.8))
        assert "sample" in report.timings

    def test_unfiltered_has_no_filter_stage(self, unseen_corpus):
        report = run(_config(unseen_corpus, scenario="unfiltered"))
        assert "filter" not in report.timings

    def test_oovd_unfiltered_rejected(self, unseen_corpus):
        with pytest.raises(ConfigError):
            run(_config(unseen_corpus, model="oovd", scenario="unfiltered"))

    def test_unknown_labels_fail_evaluation(self, tmp_path):
        p = tmp_path / "plain.log"
        p.write_text("".join(f"message {i}\n" for i in range(100)))
        with pytest.raises(ValueError, match="label"):
            run(RunConfig(input=p, adapter="plain", train_fraction=0.2))

    def test_events_representation_runs(self, unseen_corpus):
        report = run(_config(unseen_corpus, representation="events", model="oovd"))
        assert report.auc == 1.0

    def test_deterministic_grid_row(self, unseen_corpus, tmp_path):
        rows = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            run(_config(unseen_corpus, out_dir=out))
            with open(out / "grid.csv", newline="") as fh:
                rows.append(list(csv.reader(fh))[1])
        # identical except wall-clock timing columns
        assert rows[0][:7] == rows[1][:7]

    def test_histogram_csv_content(self, unseen_corpus, tmp_path):
        out = tmp_path / "out"
        report = run(_config(unseen_corpus, out_dir=out, n_bins=10))
        hist_file = next(out.glob("hist_*.csv"))
        rows = hist_file.read_text().splitlines()[1:]
        total = sum(int(r.split(",")[2]) + int(r.split(",")[3]) for r in rows)
        assert total == report.meta["n_test_docs"]

    def test_template_dump_written(self, unseen_corpus, tmp_path):
        out = tmp_path / "out"
        run(_config(unseen_corpus, representation="events", model="oovd",
                    out_dir=out, dump_templates=True))
        assert any(out.glob("templates_*.csv"))


class TestGrid:
    def test_cell_counts(self):
        assert len(grid_cells("unfiltered")) == 9
        assert len(grid_cells("normal_only")) == 12

    def test_grid_rows_and_reports(self, unseen_corpus, tmp_path):
        out = tmp_path / "grid"
        reports = run_grid(_config(unseen_corpus, scenario="unfiltered", out_dir=out))
        assert len(reports) == 9
        assert not any(r.meta["model"] == "oovd" for r in reports)
        with open(out / "grid.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert len(rows) == 10  # header + 9 cells
        assert len(list(out.glob("report_*.json"))) == 9


class TestRepeats:
    def test_summary_statistics(self, unseen_corpus, tmp_path):
        out = tmp_path / "rep"
        reports, summary = run_repeats(_config(unseen_corpus, out_dir=out), repeats=3)
        assert len(reports) == 3
        assert [r.meta["seed"] for r in reports] == [1, 2, 3]
        for metric in ("auc", "f1", "model_time"):
            stats = summary[metric]
            assert stats["min"] <= stats["mean"] <= stats["max"]
        assert json.loads((out / "summary.json").read_text())["auc"] == summary["auc"]

    def test_bad_repeat_count(self, unseen_corpus):
        with pytest.raises(ConfigError):
            run_repeats(_config(unseen_corpus), repeats=0)


def _mangle_test_lines(corpus: Path, out: Path, config: RunConfig) -> None:
    """Rewrite the messages of every test-side line, keeping labels and count."""
    rs = load(corpus, config.adapter)
    spec = SplitSpec(config.train_fraction, config.seed, SplitMode(config.split_mode))
    _, test_rs = split(rs, spec)
    test_line_nos = {r.line_no for r in test_rs}
    lines = corpus.read_text().splitlines()
    mangled = []
    for i, line in enumerate(lines):
        if i in test_line_nos:
            head = line.split(maxsplit=9)[:9]
            mangled.append(" ".join(head) + f" mangled payload qq{i} zz ww yy xx vv")
        else:
            mangled.append(line)
    out.write_text("\n".join(mangled) + "\n")


class TestLeakageCanary:
    @pytest.mark.parametrize("model,rep", [
        ("oovd", "words"),
        ("rm", "words"),
        ("kmeans", "words"),
        ("iforest", "words"),
        ("oovd", "events"),
    ])
    def test_fitted_artifacts_ignore_test_contents(self, unseen_corpus, tmp_path, model, rep):
        config = _config(unseen_corpus, model=model, representation=rep)
        mangled = tmp_path / "mangled.log"
        _mangle_test_lines(Path(unseen_corpus), mangled, config)

        _, base = execute(config)
        _, other = execute(_config(mangled, model=model, representation=rep))

        assert base.vocabulary.term_to_col == other.vocabulary.term_to_col
        assert np.array_equal(base.vocabulary.doc_freq, other.vocabulary.doc_freq)
        assert np.array_equal(base.vocabulary.term_total, other.vocabulary.term_total)
        if rep == "events":
            assert [(g.event_id, g.template, g.count) for g in base.drain.groups()] == [
                (g.event_id, g.template, g.count) for g in other.drain.groups()
            ]
        if model == "rm":
            assert np.array_equal(base.model.rarity, other.model.rarity)
        elif model == "kmeans":
            assert np.array_equal(base.model.centroids, other.model.centroids)
        elif model == "iforest":
            for ta, tb in zip(base.model.trees, other.model.trees):
                assert np.array_equal(ta.feature, tb.feature)
                assert np.array_equal(ta.threshold, tb.threshold)
                assert np.array_equal(ta.adjust, tb.adjust)


class TestCli:
    def test_gen_and_run(self, tmp_path, capsys):
        log = tmp_path / "syn.log"
        assert main(["gen", "--out", str(log), "--normal", "400", "--anomalies", "20",
                     "--templates", "8", "--seed", "4"]) == 0
        out = tmp_path / "results"
        code = main([
            "run", "--input", str(log), "--adapter", "bgl", "--rep", "words",
            "--model", "rm", "--scenario", "normal_only", "--train-frac", "0.2",
            "--seed", "1", "--out", str(out),
        ])
        assert code == 0
        captured = capsys.readouterr().out
        assert "auc=" in captured
        assert (out / "report.json").exists()

    def test_config_file_with_flag_override(self, tmp_path, capsys):
        log = gen_synthetic(tmp_path / "c.log", 400, 20, 8, "unseen_token", seed=4)
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "input": str(log), "adapter": "bgl", "model": "rm",
            "scenario": "normal_only", "train_fraction": 0.2, "seed": 1,
        }))
        assert main(["run", "--config", str(cfg), "--model", "oovd"]) == 0
        assert "model=oovd" in capsys.readouterr().out

    def test_unknown_config_key(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"inptu": "x.log"}))
        assert main(["run", "--config", str(cfg)]) == 2

    def test_oovd_unfiltered_is_config_error(self, tmp_path):
        log = gen_synthetic(tmp_path / "d.log", 200, 10, 8, "unseen_token", seed=4)
        code = main(["run", "--input", str(log), "--adapter", "bgl",
                     "--model", "oovd", "--scenario", "unfiltered"])
        assert code == 2

    def test_grid_repeats_conflict(self, tmp_path):
        log = gen_synthetic(tmp_path / "e.log", 200, 10, 8, "unseen_token", seed=4)
        code = main(["run", "--input", str(log), "--adapter", "bgl",
                     "--grid", "--repeats", "3"])
        assert code == 2

    def test_missing_input(self):
        assert main(["run", "--model", "rm"]) == 2
