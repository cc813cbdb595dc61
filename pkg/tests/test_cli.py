"""End-to-end tests for the command-line subcommands and their exit codes."""
import json

import pandas as pd

from main import main
from utils.errors import NonFiniteLoss, PipelineStageError


def run(*argv):
    return main(["--quiet", *argv])


class TestWorkflow:

    def test_synth_to_evaluate(self, tmp_path):
        synth = str(tmp_path / "synth.csv")
        clean = str(tmp_path / "clean.csv")
        selection = str(tmp_path / "selection.json")
        model = str(tmp_path / "model.json")
        evaluation = str(tmp_path / "eval.json")
        roc = str(tmp_path / "roc.csv")

        assert run("synth", "--rows", "400", "--features", "6", "--informative", "2",
                   "--sep", "4", "--seed", "3", "--out", synth) == 0
        assert run("preprocess", "--in", synth, "--report", str(tmp_path / "prep.json"), "--out", clean) == 0
        assert run("select", "--in", clean, "--k", "3", "--out", selection) == 0
        assert run("train", "--train", clean, "--model", "logreg", "--selection", selection, "--out", model) == 0
        assert run("evaluate", "--test", clean, "--model", model, "--out", evaluation, "--roc", roc) == 0

        with open(selection, encoding="utf-8") as f:
            selected = json.load(f)["selected"]
        with open(model, encoding="utf-8") as f:
            saved = json.load(f)
        assert saved["columns"] == selected
        assert saved["scaler"]["columns"] == selected
        with open(evaluation, encoding="utf-8") as f:
            assert json.load(f)["accuracy"] > 0.9
        assert list(pd.read_csv(roc).columns) == ["fpr", "tpr", "threshold"]

    def test_train_network_writes_trace(self, tmp_path):
        synth = str(tmp_path / "synth.csv")
        config_path = tmp_path / "dnn.json"
        config_path.write_text(json.dumps({"hidden_layers": [8], "epochs": 3}), encoding="utf-8")
        trace = str(tmp_path / "trace.csv")
        assert run("synth", "--rows", "200", "--features", "4", "--out", synth) == 0
        assert run("train", "--train", synth, "--model", "dnn", "--config", str(config_path),
                   "--trace", trace, "--out", str(tmp_path / "dnn.json.out")) == 0
        assert len(pd.read_csv(trace)) == 3

    def test_bench(self, tmp_path):
        plan = tmp_path / "plan.json"
        plan.write_text(json.dumps({
            "source": {"synth": {"n_rows": 200, "n_features": 4, "class_separation": 3.0, "seed": 1}},
            "roster": ["logreg", "constant"],
            "rfe_k": 3,
            "cv_folds": 2,
            "clock": "tick",
        }), encoding="utf-8")
        out = str(tmp_path / "report.json")
        markdown = str(tmp_path / "report.md")
        series = str(tmp_path / "series")
        assert run("bench", "--plan", str(plan), "--out", out, "--markdown", markdown, "--csv-dir", series) == 0
        with open(out, encoding="utf-8") as f:
            assert [m["model_id"] for m in json.load(f)["models"]] == ["logreg", "constant"]
        assert (tmp_path / "series" / "roc_all.csv").exists()

    def test_clock_override_gives_identical_reports(self, tmp_path):
        plan = tmp_path / "plan.json"
        plan.write_text(json.dumps({
            "source": {"synth": {"n_rows": 150, "n_features": 4, "seed": 2}},
            "roster": ["logreg", "knn"],
            "rfe_k": 3,
            "cv_folds": 2,
        }), encoding="utf-8")
        first, second = tmp_path / "a.json", tmp_path / "b.json"
        assert run("bench", "--plan", str(plan), "--clock", "tick", "--out", str(first)) == 0
        assert run("bench", "--plan", str(plan), "--clock", "tick", "--out", str(second)) == 0
        assert first.read_bytes() == second.read_bytes()
        assert json.loads(first.read_text(encoding="utf-8"))["environment"]["clock"] == "tick"


class TestExitCodes:

    def test_missing_input_file(self, tmp_path):
        assert run("preprocess", "--in", str(tmp_path / "absent.csv"), "--out", str(tmp_path / "o.csv")) == 2

    def test_unknown_config_key(self, tmp_path):
        synth = str(tmp_path / "synth.csv")
        config_path = tmp_path / "bad.json"
        config_path.write_text(json.dumps({"depth": 3}), encoding="utf-8")
        assert run("synth", "--rows", "50", "--out", synth) == 0
        assert run("train", "--train", synth, "--model", "tree", "--config", str(config_path),
                   "--out", str(tmp_path / "m.json")) == 2

    def test_missing_plan(self, tmp_path):
        assert run("bench", "--plan", str(tmp_path / "none.json"), "--out", str(tmp_path / "r.json")) == 2

    def test_failing_stage_keeps_cause_exit_code(self, tmp_path):
        plan = tmp_path / "plan.json"
        plan.write_text(json.dumps({
            "source": {"synth": {"n_rows": 100, "n_features": 3}},
            "roster": ["constant"],
            "rfe_k": 9,
            "cv_folds": 2,
        }), encoding="utf-8")
        assert run("bench", "--plan", str(plan), "--out", str(tmp_path / "r.json")) == 2

    def test_numeric_failures_map_to_three(self):
        assert PipelineStageError("fit", NonFiniteLoss("x")).exit_code == 3
