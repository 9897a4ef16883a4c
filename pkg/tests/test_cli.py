import json
import os

import numpy as np
import pytest
from click.testing import CliRunner

from vizpick.cli import main
from vizpick.features import FEATURE_NAMES
from vizpick.training import bundles_equal, load_bundle

CSV = b"x,y\n0,1\n1,2\n2,3\n3,4\n4,5\n"


@pytest.fixture
def runner():
    return CliRunner()


def _write_csv(tmp_path, name="t.csv", data=CSV):
    path = tmp_path / name
    path.write_bytes(data)
    return path


def _make_corpus(runner, tmp_path, count=3, seed=0, name="corpus"):
    out = tmp_path / name
    result = runner.invoke(main, ["synth", "--out", str(out), "--count", str(count), "--seed", str(seed)])
    assert result.exit_code == 0, result.output
    return out


class TestStats:
    def test_feature_json(self, runner, tmp_path):
        path = _write_csv(tmp_path)
        result = runner.invoke(main, ["stats", str(path)])
        assert result.exit_code == 0, result.output
        payload = json.loads(result.output)
        assert set(payload) == set(FEATURE_NAMES)
        assert payload["pearson_r"] == pytest.approx(1.0, abs=1e-9)

    def test_multi_series_split(self, runner, tmp_path):
        path = _write_csv(tmp_path, data=b"x,y1,y2\n0,1,5\n1,2,4\n2,3,3\n3,4,2\n4,5,1\n")
        result = runner.invoke(main, ["stats", str(path)])
        payload = json.loads(result.output)
        assert set(payload) == {"t_s1", "t_s2"}

    def test_too_few_rows_exit_code(self, runner, tmp_path):
        path = _write_csv(tmp_path, data=b"x,y\n0,1\n1,2\n")
        result = runner.invoke(main, ["stats", str(path)])
        assert result.exit_code == 5
        assert "error" in result.output or "error" in (result.stderr or "")


class TestRender:
    def test_writes_three_pgms(self, runner, tmp_path):
        path = _write_csv(tmp_path)
        out = tmp_path / "imgs"
        result = runner.invoke(main, ["render", str(path), "--out", str(out), "--formats", "pgm,png"])
        assert result.exit_code == 0, result.output
        names = sorted(p.name for p in out.iterdir())
        assert names == sorted(
            [f"t__{k}.{ext}" for k in ("scatter", "line", "density") for ext in ("pgm", "png")]
        )

    def test_unknown_format_rejected(self, runner, tmp_path):
        path = _write_csv(tmp_path)
        result = runner.invoke(main, ["render", str(path), "--out", str(tmp_path / "x"), "--formats", "bmp"])
        assert result.exit_code == 3


class TestSynth:
    def test_deterministic_corpora(self, runner, tmp_path):
        a = _make_corpus(runner, tmp_path, name="a", seed=3)
        b = _make_corpus(runner, tmp_path, name="b", seed=3)
        files_a = sorted((a / "tables").iterdir())
        files_b = sorted((b / "tables").iterdir())
        assert [f.name for f in files_a] == [f.name for f in files_b]
        for fa, fb in zip(files_a, files_b):
            assert fa.read_bytes() == fb.read_bytes()
        assert (a / "manifest.json").read_bytes() == (b / "manifest.json").read_bytes()


class TestTrainRecommendEval:
    def test_pipeline_smoke(self, runner, tmp_path):
        corpus = _make_corpus(runner, tmp_path, count=4)
        bundle_path = tmp_path / "m.bundle"
        result = runner.invoke(
            main, ["train", "--corpus", str(corpus), "--out", str(bundle_path), "--epochs", "0"]
        )
        assert result.exit_code == 0, result.output
        assert bundle_path.exists()

        rec_out = tmp_path / "rec.json"
        result = runner.invoke(
            main,
            ["recommend", "--input", str(_write_csv(tmp_path)), "--models", str(bundle_path),
             "--scoring", "top5", "--out", str(rec_out)],
        )
        assert result.exit_code == 0, result.output
        payload = json.loads(rec_out.read_text())
        assert payload["chosen"] in ("scatter", "line", "density")
        assert set(payload["scores"]) == {"scatter", "line", "density"}
        assert payload["scoring"] == "top5"

    def test_train_epochs_zero_matches_init_deterministically(self, runner, tmp_path):
        corpus = _make_corpus(runner, tmp_path, count=3)
        p1, p2 = tmp_path / "a1.bundle", tmp_path / "a2.bundle"
        for p in (p1, p2):
            result = runner.invoke(
                main, ["train", "--corpus", str(corpus), "--out", str(p), "--epochs", "0"]
            )
            assert result.exit_code == 0, result.output
        assert bundles_equal(load_bundle(p1), load_bundle(p2))

    def test_eval_report_layout(self, runner, tmp_path):
        corpus = _make_corpus(runner, tmp_path, count=4)
        b1, b2 = tmp_path / "s0.bundle", tmp_path / "s1.bundle"
        for seed, p in ((0, b1), (1, b2)):
            result = runner.invoke(
                main,
                ["train", "--corpus", str(corpus), "--out", str(p), "--epochs", "0", "--seed", str(seed)],
            )
            assert result.exit_code == 0, result.output
        report_dir = tmp_path / "report"
        result = runner.invoke(
            main,
            ["eval", "--corpus", str(corpus), "--models", str(b1), "--models", str(b2),
             "--split", "all", "--report-dir", str(report_dir)],
        )
        assert result.exit_code == 0, result.output
        rows = json.loads((report_dir / "report.json").read_text())
        # two single-seed models plus the ensemble, times three scoring kinds
        assert len(rows) == 9
        assert {r["model"] for r in rows} == {"s0", "s1", "(s0+s1)"}
        assert {r["scoring"] for r in rows} == {"l1", "top5", "top10"}
        for row in rows:
            m = row["metrics"]
            assert set(m["f1"]) == {"scatter", "line", "density"}
            assert 0 <= m["accuracy"] <= 1
        text = (report_dir / "report.txt").read_text()
        assert "Top-5 Closest Loss" in text and "Weighted F1-Score" in text

    def test_recommend_session_artifacts(self, runner, tmp_path):
        corpus = _make_corpus(runner, tmp_path, count=3)
        bundle_path = tmp_path / "m.bundle"
        runner.invoke(main, ["train", "--corpus", str(corpus), "--out", str(bundle_path), "--epochs", "0"])
        session = tmp_path / "session"
        result = runner.invoke(
            main,
            ["recommend", "--corpus", str(corpus), "--split", "all", "--models", str(bundle_path),
             "--session-dir", str(session), "--out", str(tmp_path / "recs.json")],
        )
        assert result.exit_code == 0, result.output
        tasks = json.loads((session / "tasks.json").read_text())
        assert len(tasks) == 9 * 3  # 9 tables, one CSI + two FT each
        recs = json.loads((session / "recommendations.json").read_text())
        assert len(recs) == 9
        pngs = list((session / "plots").iterdir())
        assert len(pngs) == 27


class TestConfigPrecedence:
    def test_config_file_supplies_corpus(self, runner, tmp_path):
        corpus = _make_corpus(runner, tmp_path, count=3)
        cfg = tmp_path / "pipeline.cfg"
        cfg.write_text(f"data_dir = {corpus}\n# comment line\n")
        bundle_path = tmp_path / "m.bundle"
        result = runner.invoke(
            main, ["train", "--config", str(cfg), "--out", str(bundle_path), "--epochs", "0"]
        )
        assert result.exit_code == 0, result.output

    def test_env_overrides_config(self, runner, tmp_path, monkeypatch):
        good = _make_corpus(runner, tmp_path, count=3)
        cfg = tmp_path / "pipeline.cfg"
        cfg.write_text(f"data_dir = {tmp_path / 'missing'}\n")
        monkeypatch.setenv("VIZPICK_DATA_DIR", str(good))
        bundle_path = tmp_path / "m.bundle"
        result = runner.invoke(
            main, ["train", "--config", str(cfg), "--out", str(bundle_path), "--epochs", "0"]
        )
        assert result.exit_code == 0, result.output

    def test_flag_beats_env(self, runner, tmp_path, monkeypatch):
        good = _make_corpus(runner, tmp_path, count=3)
        monkeypatch.setenv("VIZPICK_DATA_DIR", str(tmp_path / "missing"))
        bundle_path = tmp_path / "m.bundle"
        result = runner.invoke(
            main, ["train", "--corpus", str(good), "--out", str(bundle_path), "--epochs", "0"]
        )
        assert result.exit_code == 0, result.output
