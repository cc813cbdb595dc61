"""
Step 7: Report Generator Module (결과 리포트 생성)
BenchmarkReport를 JSON, 마크다운 표, CSV 묶음(ROC 곡선 / 학습 이력 / 혼동 행렬)으로 저장합니다.
"""
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from typing import Dict, List

import pandas as pd

import config
from modules.metrics import ConfusionMatrix, RocCurve
from modules.models_neural import TRACE_COLUMNS
from utils.console import log
from utils.errors import IoError, InvalidConfig
from utils.serialization import dumps

FORMATS = ("json", "markdown", "csv-bundle")

NET_PARAM_KEYS = ["hidden_layers", "activation_hidden", "activation_output", "dropout_rate",
                  "optimizer", "lr", "loss", "epochs", "batch_size", "validation_split"]


def _fmt(value, pattern: str = "{:.4f}") -> str:
    return "n/a" if value is None else pattern.format(value)


def _table(rows: List[dict]) -> str:
    if not rows:
        return "_(none)_"
    return pd.DataFrame(rows).to_markdown(index=False)


def generate_markdown(report: dict) -> str:
    """
    보고서를 마크다운 표로 구성합니다. 모든 표는 로스터 순서대로 모델당 한 행입니다.
    """
    models = report["models"]
    prep = report["preprocess"]
    split = report["split"]
    rfe = report["rfe"]
    lines = ["# Malware Detection Benchmark Report", ""]

    # 1. 데이터 개요
    lines += [
        "## 1. Data",
        "",
        f"- Rows loaded: {report['dataset']['rows']}",
        f"- Z-score filter (|z| > {prep['z_threshold']}): {prep['rows_removed']} of {prep['rows_in']} rows removed",
        f"- Split: {split['train_rows']} train / {split['test_rows']} test "
        f"(ratio {split['ratio']}, seed {split['seed']}, stratified={split['stratified']})",
    ]
    for note in prep.get("notes", []):
        lines.append(f"- Note: {note}")
    lines.append("")

    # 2. 특징 선택
    overlap = report.get("reference_overlap", {})
    lines += [
        f"## 2. Selected Features ({len(rfe['selected'])}, estimator {rfe['estimator_id']}, step {rfe['step']})",
        "",
        _table([{"#": i + 1, "feature": name} for i, name in enumerate(rfe["selected"])]),
        "",
        f"Overlap with the reference top-feature list: {overlap.get('count', 0)}",
        "",
    ]

    # 3. 정확도와 학습 시간
    lines += ["## 3. Model Accuracies and Training Time", ""]
    lines.append(_table([
        {
            "model": m["model_id"],
            "train accuracy (%)": _fmt(100 * m["train_accuracy"], "{:.2f}"),
            "CV accuracy (%)": _fmt(None if m["cv"]["mean"]["accuracy"] is None else 100 * m["cv"]["mean"]["accuracy"], "{:.2f}"),
            "test accuracy (%)": _fmt(100 * m["test"]["accuracy"], "{:.2f}"),
            "train time (s)": _fmt(m["train_time_seconds"], "{:.3f}"),
        }
        for m in models
    ]))
    lines.append("")

    # 4. 테스트 지표
    lines += ["## 4. Test-Set Performance", ""]
    lines.append(_table([
        {
            "model": m["model_id"],
            "accuracy": _fmt(m["test"]["accuracy"]),
            "precision": _fmt(m["test"]["precision"]),
            "recall": _fmt(m["test"]["recall"]),
            "f1": _fmt(m["test"]["f1"]),
            "auc": _fmt(m["test"]["auc"]),
        }
        for m in models
    ]))
    lines.append("")

    # 5. 교차검증
    k = models[0]["cv"]["k"]
    lines += [f"## 5. {k}-Fold Cross-Validation (training split)", ""]
    lines.append(_table([
        {
            "model": m["model_id"],
            "mean accuracy": _fmt(m["cv"]["mean"]["accuracy"]),
            "std accuracy": _fmt(m["cv"]["std"]["accuracy"]),
            "mean auc": _fmt(m["cv"]["mean"]["auc"]),
            "mean f1": _fmt(m["cv"]["mean"]["f1"]),
        }
        for m in models
    ]))
    lines.append("")

    # 6. MCC / Kappa
    lines += ["## 6. MCC and Cohen's Kappa (test set)", ""]
    lines.append(_table([
        {"model": m["model_id"], "MCC": _fmt(m["test"]["mcc"]), "Kappa": _fmt(m["test"]["kappa"])}
        for m in models
    ]))
    lines.append("")

    # 7. 신경망 하이퍼파라미터
    nets = [m for m in models if m["family"] in ("mlp", "dnn")]
    if nets:
        lines += ["## 7. Neural Network Hyperparameters", ""]
        rows = []
        for key in NET_PARAM_KEYS:
            row = {"parameter": key}
            for m in nets:
                value = m["config"].get(key)
                row[m["model_id"]] = ", ".join(str(v) for v in value) if isinstance(value, list) else str(value)
            rows.append(row)
        lines.append(_table(rows))
        lines.append("")

    lines += ["## Protocol", ""]
    lines += [f"- {note}" for note in report.get("protocol_notes", [])]
    env = report.get("environment", {})
    lines += ["", f"*version {env.get('version')}, threads {env.get('n_jobs')}, clock {env.get('clock')}*", ""]
    return "\n".join(lines)


def save_csv_bundle(report: dict, output_dir: str) -> Dict[str, str]:
    """
    플롯용 CSV 시리즈를 저장합니다.

    Returns:
        파일 종류별 경로 딕셔너리 (roc_<model>, trace_<model>, confusion_<model>, cv_<model>, roc_all)
    """
    os.makedirs(output_dir, exist_ok=True)
    paths = {}
    combined = []

    for m in report["models"]:
        model_id = m["model_id"]
        roc = m["test"].get("roc")
        if roc is not None:
            frame = RocCurve.from_dict(roc).to_frame()
            paths[f"roc_{model_id}"] = _write(frame, output_dir, f"roc_{model_id}.csv")
            combined.append(frame.assign(model=model_id)[["model", "fpr", "tpr", "threshold"]])

        cm = ConfusionMatrix(**m["test"]["cm"])
        paths[f"confusion_{model_id}"] = _write(cm.to_frame(), output_dir, f"confusion_{model_id}.csv", index=True)

        folds = pd.DataFrame([
            {"fold": i + 1, **{key: f[key] for key in ("accuracy", "precision", "recall", "f1", "auc", "mcc", "kappa")}}
            for i, f in enumerate(m["cv"]["folds"])
        ])
        paths[f"cv_{model_id}"] = _write(folds, output_dir, f"cv_{model_id}.csv")

        if m.get("trace"):
            trace = pd.DataFrame(m["trace"], columns=TRACE_COLUMNS)
            paths[f"trace_{model_id}"] = _write(trace, output_dir, f"trace_{model_id}.csv")

    if combined:
        paths["roc_all"] = _write(pd.concat(combined, ignore_index=True), output_dir, "roc_all.csv")
    return paths


def _write(frame: pd.DataFrame, output_dir: str, filename: str, index: bool = False) -> str:
    path = os.path.join(output_dir, filename)
    frame.to_csv(path, index=index, encoding="utf-8", float_format="%.17g")
    return path


def _write_text(text: str, path: str) -> str:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)
    return path


def render_report(report: dict, fmt: str = "json", path: str = None):
    """
    보고서를 지정 형식으로 저장합니다.

    Args:
        report: BenchmarkReport dict
        fmt: "json" | "markdown" | "csv-bundle"
        path: 파일 경로 (csv-bundle은 디렉토리). None이면 config.OUTPUT_DIR 아래 기본 이름

    Returns:
        json/markdown은 파일 경로, csv-bundle은 경로 딕셔너리
    """
    if fmt not in FORMATS:
        raise InvalidConfig(f"unknown report format '{fmt}' (choose from {FORMATS})")
    defaults = {"json": "report.json", "markdown": "report.md", "csv-bundle": "series"}
    path = path or os.path.join(config.OUTPUT_DIR, defaults[fmt])

    try:
        if fmt == "json":
            result = _write_text(dumps(report) + "\n", path)
        elif fmt == "markdown":
            result = _write_text(generate_markdown(report), path)
        else:
            result = save_csv_bundle(report, path)
    except OSError as e:
        raise IoError(f"cannot write {fmt} report to {path}: {e}")

    log(f"[REPORT] {fmt} 저장 완료: {path}")
    return result
