import json
from pathlib import Path

import pytest

from traitrec.cli import Config, ValidationError, load_config, main

FIXTURE_HTML = Path(__file__).parent / "data" / "channel_export.html"


def _run(*args):
    return main([str(a) for a in args])


def _synth_all(out_dir, seed=3, extra=()):
    assert _run("synth", "--seed", seed, "-o", out_dir, "--msgs-per-user", 30) == 0
    assert _run("all", "--seed", seed, "-o", out_dir, *extra) == 0


class TestConfig:
    def test_unknown_keys_rejected(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text('{"seed": 1, "bogus": true}', encoding="utf-8")
        with pytest.raises(ValidationError, match="bogus"):
            load_config(path)

    def test_range_validation(self):
        cfg = Config(test_fraction=1.5)
        with pytest.raises(ValidationError, match="test_fraction"):
            cfg.validate()

    def test_engine_validation(self):
        with pytest.raises(ValidationError, match="engine"):
            Config(engine="svm").validate()

    def test_log_base_is_fixed(self):
        with pytest.raises(ValidationError, match="idf_log_base"):
            Config(idf_log_base="10").validate()

    def test_config_file_plus_override(self, tmp_path, capsys):
        out = tmp_path / "run"
        cfg_path = tmp_path / "config.json"
        cfg_path.write_text(json.dumps({"output_dir": str(out), "seed": 3}), encoding="utf-8")
        assert _run("synth", "--config", cfg_path, "--msgs-per-user", 10) == 0
        # flag overrides the config file's output_dir
        other = tmp_path / "other"
        assert _run("synth", "--config", cfg_path, "-o", other, "--msgs-per-user", 10) == 0
        assert (other / "corpus.jsonl").exists()


class TestExitCodes:
    def test_missing_corpus_is_validation_error(self, tmp_path, capsys):
        assert _run("ingest", "-o", tmp_path) == 1
        assert "corpus" in capsys.readouterr().err

    def test_evaluate_without_classify_names_predictions(self, tmp_path, capsys):
        assert _run("evaluate", "-o", tmp_path) == 1
        assert "predictions" in capsys.readouterr().err

    def test_seed_required_for_train_and_synth(self, tmp_path, capsys):
        assert _run("synth", "-o", tmp_path) == 1
        assert "--seed" in capsys.readouterr().err
        assert _run("train", "-o", tmp_path) == 1

    def test_stage_order_enforced(self, tmp_path, capsys):
        assert _run("synth", "--seed", 1, "-o", tmp_path, "--msgs-per-user", 10) == 0
        assert _run("lexicon", "-o", tmp_path) == 1
        assert "ingest" in capsys.readouterr().err


class TestPipeline:
    def test_full_chain(self, tmp_path, capsys):
        _synth_all(tmp_path)
        for name in (
            "store.jsonl", "store_index.json", "histogram.json", "lexicon.json",
            "profiles.json", "split.json", "nb_model.json", "mlp_model.json",
            "feature_space.json", "predictions.json", "channel_profiles.json",
            "recommendations.jsonl", "report.json", "report.txt",
        ):
            assert (tmp_path / name).exists(), name
        report = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
        assert set(report) >= {"cosine_accuracy_pct", "nb_accuracy_pct", "mlp_accuracy_pct"}

    def test_double_ingest_doubles_counts(self, tmp_path, capsys):
        assert _run("synth", "--seed", 2, "-o", tmp_path, "--msgs-per-user", 10) == 0
        assert _run("ingest", "-o", tmp_path) == 0
        store_counts = json.loads((tmp_path / "store_index.json").read_text(encoding="utf-8"))
        assert _run("ingest", "-o", tmp_path) == 0
        doubled = json.loads((tmp_path / "store_index.json").read_text(encoding="utf-8"))
        assert doubled == {uid: 2 * n for uid, n in store_counts.items()}

    def test_rerun_all_is_byte_identical(self, tmp_path):
        dirs = [tmp_path / "a", tmp_path / "b"]
        for d in dirs:
            _synth_all(d, seed=11)
        files_a = sorted(p.name for p in dirs[0].iterdir())
        files_b = sorted(p.name for p in dirs[1].iterdir())
        assert files_a == files_b
        for name in files_a:
            assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes(), name

    def test_active_users_respect_min_messages(self, tmp_path):
        assert _run("synth", "--seed", 4, "-o", tmp_path, "--msgs-per-user", 10) == 0
        assert _run("ingest", "-o", tmp_path, "--min-messages", 11) == 0
        hist = json.loads((tmp_path / "histogram.json").read_text(encoding="utf-8"))
        assert hist["active_users"] == []
        assert _run("ingest", "-o", tmp_path, "--min-messages", 5) == 0

    def test_trait_gate_and_engine_flags(self, tmp_path):
        _synth_all(tmp_path, seed=5, extra=("--engine", "nb", "--trait-gate", "--k", "2"))
        rows = [
            json.loads(line)
            for line in (tmp_path / "recommendations.jsonl").read_text(encoding="utf-8").splitlines()
        ]
        assert all(len(r["recommendations"]) <= 2 for r in rows)

    def test_from_cosine_targets(self, tmp_path):
        _synth_all(tmp_path, seed=6, extra=("--targets", "from-cosine"))
        space = json.loads((tmp_path / "feature_space.json").read_text(encoding="utf-8"))
        assert len(space["targets"]) == len(space["row_ids"])

    def test_html_channel_directory(self, tmp_path, capsys):
        assert _run("synth", "--seed", 7, "-o", tmp_path, "--msgs-per-user", 30) == 0
        pages = tmp_path / "pages"
        pages.mkdir()
        # channel pages whose vocabulary comes from a generated user corpus
        corpus_lines = (tmp_path / "corpus.jsonl").read_text(encoding="utf-8").splitlines()
        texts = [json.loads(line)["text"] for line in corpus_lines[:6]]
        blocks = "\n".join(
            f'<div class="message default"><div class="body"><div class="text">{t}</div></div></div>'
            for t in texts
        )
        (pages / "ch_one.html").write_text(f"<html><body>{blocks}</body></html>", encoding="utf-8")
        for stage in ("ingest", "lexicon", "neo-score"):
            assert _run(stage, "-o", tmp_path) == 0
        assert _run("channels", "-o", tmp_path, "--channels", pages) == 0
        profiles = json.loads((tmp_path / "channel_profiles.json").read_text(encoding="utf-8"))
        assert [p["owner_id"] for p in profiles] == ["ch_one"]
        assert profiles[0]["index_trait"] is None  # no trained engine yet

    def test_feedback_satisfaction_in_report(self, tmp_path):
        assert _run("synth", "--seed", 8, "-o", tmp_path, "--msgs-per-user", 30) == 0
        feedback = tmp_path / "feedback.csv"
        feedback.write_text("u1,1;1;0\nu2,1\n", encoding="utf-8")
        assert _run("all", "--seed", 8, "-o", tmp_path, "--feedback", feedback) == 0
        report = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
        assert report["satisfaction_pct"] == pytest.approx(100 * (2 / 3 + 1) / 2)
        assert "satisfaction" in (tmp_path / "report.txt").read_text(encoding="utf-8")
