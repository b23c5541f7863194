import json

import numpy as np
import pytest

from namematch.cli import main, pick_seed_indices
from namematch.data import SynthConfig, load_pairs, synth_generate


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture(scope="module")
def pair_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "pairs.csv"
    ds = synth_generate(SynthConfig(seed=0, corpus_size=120), 400)
    ds.save(path)
    return path


class TestMetricsCommand:
    def test_all_scores(self, capsys):
        code, out, _ = _run(capsys, "metrics", "--a", "Acme S.p.A.", "--b", "ACME SPA")
        assert code == 0
        scores = json.loads(out)
        assert scores["levenshtein"] == 0.0  # classic cleaning unifies the two
        assert scores["jaro_winkler"] == 1.0

    def test_single_kind(self, capsys):
        code, out, _ = _run(capsys, "metrics", "--a", "KITTEN", "--b", "SITTING",
                            "--kind", "levenshtein")
        assert code == 0
        assert json.loads(out) == {"levenshtein": 3.0}


class TestSynthCommand:
    def test_generates_loadable_csv(self, capsys, tmp_path):
        out_path = tmp_path / "synth.csv"
        code, out, _ = _run(capsys, "synth", "--out", str(out_path), "-n", "200",
                            "--seed", "3")
        assert code == 0
        info = json.loads(out)
        assert info["n"] == 200
        ds = load_pairs(out_path)
        assert len(ds) == 200


class TestTrainPredictEval:
    def test_stump_lifecycle(self, capsys, pair_csv, tmp_path):
        model_path = tmp_path / "stump.json"
        code, _, _ = _run(capsys, "train", "--model", "stump", "--train", str(pair_csv),
                          "--out", str(model_path), "--metric", "jaro_winkler")
        assert code == 0

        code, out, _ = _run(capsys, "predict", "--model", str(model_path),
                            "--a", "ACME SPA", "--b", "ACME S.P.A.")
        assert code == 0
        assert 0.0 <= json.loads(out)["y_hat"] <= 1.0

        code, out, _ = _run(capsys, "eval", "--model", str(model_path),
                            "--test", str(pair_csv))
        assert code == 0
        report = json.loads(out)
        assert set(report) >= {"tp", "tn", "fp", "fn", "balanced_accuracy", "f1", "mcc"}
        assert report["balanced_accuracy"] > 0.5

    def test_forest_lifecycle(self, capsys, pair_csv, tmp_path):
        model_path = tmp_path / "forest.json"
        code, _, _ = _run(capsys, "train", "--model", "forest", "--train", str(pair_csv),
                          "--out", str(model_path), "--seed", "1")
        assert code == 0
        code, out, _ = _run(capsys, "eval", "--model", str(model_path),
                            "--test", str(pair_csv))
        assert code == 0
        assert json.loads(out)["balanced_accuracy"] > 0.5

    def test_siamese_train_smoke(self, capsys, tmp_path):
        train_path = tmp_path / "tiny.csv"
        synth_generate(SynthConfig(seed=1, corpus_size=60), 60).save(train_path)
        model_path = tmp_path / "model.npz"
        code, out, _ = _run(capsys, "train", "--model", "siamese",
                            "--train", str(train_path), "--out", str(model_path),
                            "--epochs", "2", "--seq-len", "48", "--batch-size", "16")
        assert code == 0
        assert np.isfinite(json.loads(out.splitlines()[-1])["final_loss"])
        code, out, _ = _run(capsys, "predict", "--model", str(model_path),
                            "--a", "ACME SPA", "--b", "ACME S.P.A.")
        assert code == 0


class TestSplitCommand:
    def test_writes_nested_folds(self, capsys, pair_csv, tmp_path):
        out_dir = tmp_path / "folds"
        code, out, _ = _run(capsys, "split", "--input", str(pair_csv),
                            "--out", str(out_dir), "--k", "3", "--jo")
        assert code == 0
        for i in range(3):
            test = load_pairs(out_dir / f"fold{i}_test.csv")
            large = load_pairs(out_dir / f"fold{i}_train_large.csv")
            medium = load_pairs(out_dir / f"fold{i}_train_medium.csv")
            small = load_pairs(out_dir / f"fold{i}_train_small.csv")
            jo = load_pairs(out_dir / f"fold{i}_test_jo.csv")
            assert len(test) + len(large) == 400
            assert set(small.pairs) <= set(medium.pairs) <= set(large.pairs)
            assert set(jo.pairs) <= set(test.pairs)


class TestAlRunCommand:
    def _config(self, tmp_path, pair_csv, history_name):
        test_path = tmp_path / "test.csv"
        synth_generate(SynthConfig(seed=9, corpus_size=100), 150).save(test_path)
        history = tmp_path / history_name
        config = {
            "train_csv": str(pair_csv),
            "seed": 0,
            "seed_size": 40,
            "schedule": [20, 30],
            "strategy": "lc",
            "learner": {"kind": "forest", "forest": {"n_trees": 10}},
            "test_sets": {"holdout": str(test_path)},
            "history_csv": str(history),
        }
        config_path = tmp_path / f"{history_name}.json"
        config_path.write_text(json.dumps(config), encoding="utf-8")
        return config_path, history

    def test_run_and_byte_identical_history(self, capsys, pair_csv, tmp_path):
        config1, hist1 = self._config(tmp_path, pair_csv, "h1.csv")
        config2, hist2 = self._config(tmp_path, pair_csv, "h2.csv")
        code, out, _ = _run(capsys, "al-run", "--config", str(config1))
        assert code == 0
        assert json.loads(out)["n_labelled"] == [40, 60, 90]
        code, _, _ = _run(capsys, "al-run", "--config", str(config2))
        assert code == 0
        assert hist1.read_bytes() == hist2.read_bytes()
        header = hist1.read_text().splitlines()[0]
        assert header == "step,n_labelled,ba_pre,ba_post,ba_pool,ba_holdout"

    def test_paper_schedule_keyword(self, tmp_path, pair_csv):
        from namematch.cli import load_run_config

        config = {"train_csv": str(pair_csv), "schedule": "paper"}
        path = tmp_path / "run.json"
        path.write_text(json.dumps(config), encoding="utf-8")
        _, _, run_config, _, _ = load_run_config(path)
        assert run_config.schedule == (100, 200, 400, 800, 800, 800, 1400, 1400)


class TestErrors:
    def test_missing_file_json_error(self, capsys):
        code, _, err = _run(capsys, "eval", "--model", "missing.json",
                            "--test", "missing.csv")
        assert code == 1
        assert "error" in json.loads(err)

    def test_bad_pair_file(self, capsys, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("x,y\n", encoding="utf-8")
        code, _, err = _run(capsys, "train", "--model", "stump",
                            "--train", str(bad), "--out", str(tmp_path / "m.json"))
        assert code == 1
        assert "header" in json.loads(err)["error"]


class TestSeedSelection:
    def test_stratified_and_deterministic(self, pair_csv):
        ds = load_pairs(pair_csv)
        idx1 = pick_seed_indices(ds, 40, seed=0)
        idx2 = pick_seed_indices(ds, 40, seed=0)
        assert idx1 == idx2
        labels = ds.labels[idx1]
        assert abs(labels.mean() - ds.positive_ratio) < 0.1
        assert len(idx1) == len(set(idx1))
