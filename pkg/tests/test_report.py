"""Tests for report rendering: JSON, markdown tables and the CSV bundle."""
import json

import numpy as np
import pandas as pd
import pytest

from modules.bench import BenchmarkPlan, run_benchmark
from modules.data import SynthSpec
from modules.report_generator import generate_markdown, render_report, save_csv_bundle
from utils.errors import InvalidConfig, IoError
from utils.serialization import dumps

ROSTER = ("logreg", "knn", {"model_id": "dnn", "family": "dnn", "config": {"hidden_layers": [8]}})


def plain(obj):
    """In-memory report → built-in Python values (tuples and arrays as lists)."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


@pytest.fixture(scope="module")
def report():
    plan = BenchmarkPlan(
        source=SynthSpec(n_rows=240, n_features=5, n_informative=2, class_separation=3.0, seed=12),
        roster=ROSTER,
        rfe_k=3,
        cv_folds=3,
        clock="tick",
    )
    return run_benchmark(plan)


class TestMarkdown:

    def test_one_row_per_model_in_each_table(self, report):
        lines = generate_markdown(report).splitlines()
        for model_id in ("logreg", "knn", "dnn"):
            assert sum(line.startswith(f"| {model_id} ") for line in lines) == 4

    def test_sections(self, report):
        text = generate_markdown(report)
        for heading in ("## 1. Data", "## 2. Selected Features (3", "## 3. Model Accuracies and Training Time",
                        "## 4. Test-Set Performance", "## 5. 3-Fold Cross-Validation",
                        "## 6. MCC and Cohen's Kappa", "## 7. Neural Network Hyperparameters", "## Protocol"):
            assert heading in text
        assert "clock tick" in text

    def test_no_network_section_without_networks(self, report):
        trimmed = dict(report, models=[m for m in report["models"] if m["family"] != "dnn"])
        assert "Neural Network Hyperparameters" not in generate_markdown(trimmed)


class TestRender:

    def test_json_parses_back_to_the_report(self, report, tmp_path):
        path = render_report(report, "json", str(tmp_path / "report.json"))
        with open(path, encoding="utf-8") as f:
            parsed = json.load(f)
        assert parsed == plain(report)
        first = parsed["models"][0]["test"]["roc"]["points"][0]
        assert first[:2] == [0.0, 0.0]
        assert isinstance(first[2], float)

    def test_non_finite_values_serialize_as_null(self):
        encoded = dumps({"a": float("inf"), "b": np.float64("nan"), "c": [1.5]})
        assert json.loads(encoded) == {"a": None, "b": None, "c": [1.5]}

    def test_markdown_file(self, report, tmp_path):
        path = render_report(report, "markdown", str(tmp_path / "out" / "report.md"))
        with open(path, encoding="utf-8") as f:
            assert f.read() == generate_markdown(report)

    def test_csv_bundle(self, report, tmp_path):
        paths = render_report(report, "csv-bundle", str(tmp_path / "series"))
        assert {"roc_logreg", "confusion_knn", "cv_dnn", "trace_dnn", "roc_all"} <= set(paths)
        assert "trace_logreg" not in paths

        trace = pd.read_csv(paths["trace_dnn"])
        assert len(trace) == 10
        assert list(trace.columns) == ["epoch", "train_loss", "train_acc", "val_loss", "val_acc"]

        roc = pd.read_csv(paths["roc_logreg"])
        assert (roc["fpr"].iloc[0], roc["tpr"].iloc[0]) == (0.0, 0.0)
        assert (roc["fpr"].iloc[-1], roc["tpr"].iloc[-1]) == (1.0, 1.0)

        combined = pd.read_csv(paths["roc_all"])
        assert list(combined["model"].unique()) == ["logreg", "knn", "dnn"]

        confusion = pd.read_csv(paths["confusion_knn"], index_col=0)
        assert int(confusion.to_numpy().sum()) == report["split"]["test_rows"]
        assert len(pd.read_csv(paths["cv_dnn"])) == 3

    def test_bundle_helper_returns_same_keys(self, report, tmp_path):
        direct = save_csv_bundle(report, str(tmp_path / "a"))
        rendered = render_report(report, "csv-bundle", str(tmp_path / "b"))
        assert set(direct) == set(rendered)

    def test_unknown_format(self, report, tmp_path):
        with pytest.raises(InvalidConfig):
            render_report(report, "html", str(tmp_path / "r.html"))

    def test_unwritable_path(self, report, tmp_path):
        blocker = tmp_path / "blocker"
        blocker.write_text("", encoding="utf-8")
        with pytest.raises(IoError):
            render_report(report, "markdown", str(blocker / "report.md"))
