"""
Step 6: Benchmark Module (벤치마크)
필터 → 분할 → RFE → 모델별 k-fold 교차검증 및 테스트 평가를 순서대로 실행하고
결과를 하나의 BenchmarkReport dict로 모읍니다.
"""
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import concurrent.futures
import contextlib
import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np
import pandas as pd

import config
from modules.data import Dataset, FeatureSchema, SynthSpec, kaggle_schema, infer_schema, load_csv, synth_generate
from modules.preprocess import zscore_filter, split, fit_scaler, apply_scaler
from modules.selection import rfe, apply_selection
from modules import model_registry
from modules.metrics import evaluate_scores, SCALAR_KEYS
from utils.console import log, banner
from utils.errors import MalDetError, FoldTooSmall, InvalidPlan, PipelineStageError, IoError
from utils.seeding import derive_seed, make_rng
from utils.serialization import load_json

CLOCKS = ("perf_counter", "tick")
TICK_SECONDS = 1e-3

PROTOCOL_NOTES = [
    "outlier filter applied once to the full dataset before splitting",
    "feature selection ran once on the training split, with standardization fitted on that split",
    "cross-validation ran on the training split only; the test split was untouched until final evaluation",
    "standardization was refitted on the training folds of every CV fold",
]


@dataclass(frozen=True)
class RosterEntry:
    model_id: str
    family: str
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"model_id": self.model_id, "family": self.family, "config": dict(self.config)}


@dataclass(frozen=True)
class BenchmarkPlan:
    """
    벤치마크 실행 계획.
    source는 CSV 경로 또는 SynthSpec입니다. rfe_k=None이면 모든 특징을 유지합니다.
    clock="tick"은 학습 한 번을 1ms로 기록하는 논리 시계로, 보고서를 바이트 단위로 재현할 때 씁니다.
    """
    source: Union[str, SynthSpec]
    roster: Tuple[RosterEntry, ...] = ()
    schema: Union[str, FeatureSchema, None] = None
    label_column: str = config.LABEL_COLUMN
    z_threshold: float = config.Z_THRESHOLD
    rfe_k: Optional[int] = config.RFE_K
    rfe_estimator: str = config.RFE_ESTIMATOR
    rfe_step: int = config.RFE_STEP
    ratio: float = config.SPLIT_RATIO
    stratified: bool = config.STRATIFIED
    split_seed: Optional[int] = None
    cv_folds: int = config.CV_FOLDS
    master_seed: int = config.MASTER_SEED
    clock: str = "perf_counter"

    def __post_init__(self):
        roster = tuple(
            entry if isinstance(entry, RosterEntry) else _roster_entry(entry) for entry in self.roster
        )
        object.__setattr__(self, "roster", roster)
        if not roster:
            raise InvalidPlan("roster must name at least one model")
        ids = [entry.model_id for entry in roster]
        if len(set(ids)) != len(ids):
            raise InvalidPlan(f"duplicate model ids in roster: {ids}")
        for entry in roster:
            if entry.family not in model_registry.CONFIG_CLASSES:
                raise InvalidPlan(f"unknown model family '{entry.family}' for '{entry.model_id}'")
        if self.cv_folds < 2:
            raise InvalidPlan(f"cv_folds must be >= 2, got {self.cv_folds}")
        if self.clock not in CLOCKS:
            raise InvalidPlan(f"clock must be one of {CLOCKS}, got '{self.clock}'")

    @property
    def effective_split_seed(self) -> int:
        return self.master_seed if self.split_seed is None else self.split_seed

    def to_dict(self) -> dict:
        if isinstance(self.source, SynthSpec):
            source = {"synth": self.source.to_dict()}
        else:
            source = {"csv": self.source}
        schema = self.schema.to_dict() if isinstance(self.schema, FeatureSchema) else self.schema
        return {
            "source": source,
            "schema": schema,
            "label_column": self.label_column,
            "roster": [entry.to_dict() for entry in self.roster],
            "z_threshold": self.z_threshold,
            "rfe_k": self.rfe_k,
            "rfe_estimator": self.rfe_estimator,
            "rfe_step": self.rfe_step,
            "ratio": self.ratio,
            "stratified": self.stratified,
            "split_seed": self.effective_split_seed,
            "cv_folds": self.cv_folds,
            "master_seed": self.master_seed,
            "clock": self.clock,
        }


def _roster_entry(item) -> RosterEntry:
    """"forest" 또는 {"model_id", "family", "config"} 형식을 받습니다."""
    if isinstance(item, str):
        return RosterEntry(model_id=item, family=item)
    if isinstance(item, dict) and "model_id" in item:
        return RosterEntry(
            model_id=str(item["model_id"]),
            family=str(item.get("family", item["model_id"])),
            config=dict(item.get("config") or {}),
        )
    raise InvalidPlan(f"cannot read roster entry {item!r}")


def plan_from_dict(d: dict, base_dir: str = "") -> BenchmarkPlan:
    """
    JSON 계획 파일 내용을 BenchmarkPlan으로 변환합니다.
    source는 {"csv": 경로} 또는 {"synth": SynthSpec 필드}입니다. 상대 경로는 base_dir 기준입니다.
    """
    d = dict(d)
    source = d.pop("source", None)
    if isinstance(source, str):
        source = {"csv": source}
    if not isinstance(source, dict) or len(source) != 1:
        raise InvalidPlan("plan needs a source: {\"csv\": path} or {\"synth\": {...}}")
    if "synth" in source:
        try:
            source = SynthSpec.from_dict(source["synth"])
        except TypeError as e:
            raise InvalidPlan(f"bad synth source: {e}")
    elif "csv" in source:
        path = source["csv"]
        source = path if os.path.isabs(path) else os.path.join(base_dir, path)
    else:
        raise InvalidPlan(f"unknown source kind {sorted(source)}")

    schema = d.pop("schema", None)
    if isinstance(schema, dict):
        schema = FeatureSchema.from_dict(schema)
    elif schema not in (None, "kaggle", "infer"):
        raise InvalidPlan(f"schema must be 'kaggle', 'infer', an object or null, got {schema!r}")

    roster = d.pop("roster", config.DEFAULT_ROSTER)
    try:
        return BenchmarkPlan(source=source, schema=schema, roster=tuple(roster), **d)
    except TypeError as e:
        raise InvalidPlan(f"bad plan field: {e}")


def load_plan(path: str) -> BenchmarkPlan:
    try:
        raw = load_json(path)
    except OSError as e:
        raise IoError(f"cannot read plan {path}: {e}")
    except ValueError as e:
        raise InvalidPlan(f"plan {path} is not valid JSON: {e}")
    return plan_from_dict(raw, base_dir=os.path.dirname(os.path.abspath(path)))


# ============== Cross-validation ==============

def stratified_folds(labels: np.ndarray, k: int, seed: int) -> List[np.ndarray]:
    """
    계층화 k-fold 분할 (위치 인덱스).
    클래스별로 섞은 뒤 이어 붙여 순서대로 fold에 돌려 배정하므로
    fold 크기와 fold별 클래스 수가 각각 1행 이내로 균형을 이룹니다.
    """
    labels = np.asarray(labels)
    n = len(labels)
    if k < 2:
        raise FoldTooSmall(f"k must be >= 2, got {k}")
    if k > n:
        raise FoldTooSmall(f"cannot make {k} folds from {n} rows")
    counts = [int(np.sum(labels == c)) for c in (0, 1)]
    if min(counts) < 2:
        raise FoldTooSmall(f"each class needs at least 2 rows so every training fold holds both, got {counts}")

    rng = make_rng(seed, "folds")
    ordered = np.concatenate([rng.permutation(np.flatnonzero(labels == c)) for c in (0, 1)])
    assignment = np.empty(n, dtype=np.int64)
    assignment[ordered] = np.arange(n) % k
    return [np.flatnonzero(assignment == f) for f in range(k)]


def aggregate(folds: List[dict]) -> Tuple[dict, dict]:
    """fold 목록에서 지표별 평균과 모표준편차를 계산합니다 (값이 없는 fold는 제외)."""
    mean, std = {}, {}
    for key in SCALAR_KEYS:
        values = [f[key] for f in folds if f.get(key) is not None]
        if values:
            mean[key] = float(np.mean(values))
            std[key] = float(np.std(values, ddof=0))
        else:
            mean[key] = None
            std[key] = None
    return mean, std


def _timed_fit(family: str, train: Dataset, cfg, clock: str = "perf_counter"):
    """학습만 단조 시계로 측정합니다 (데이터 적재와 평가는 제외)."""
    start = time.perf_counter()
    model = model_registry.fit_model(family, train, cfg)
    elapsed = time.perf_counter() - start
    return model, (TICK_SECONDS if clock == "tick" else elapsed)


def kfold_cv(
    train: Dataset,
    model_id: str,
    family: Optional[str] = None,
    cfg=None,
    k: int = config.CV_FOLDS,
    seed: int = config.MASTER_SEED,
    audit: Optional[list] = None,
    clock: str = "perf_counter",
) -> dict:
    """
    계층화 k-fold 교차검증. fold마다 나머지 k-1개 fold로 표준화 통계를 다시 추정합니다.

    Args:
        train: 학습 분할 데이터
        model_id: 보고서에 쓰일 모델 이름
        family: 모델 계열 (생략 시 model_id)
        cfg: 모델 설정 (생략 시 계열 기본값)
        k: fold 수
        seed: fold 분할 시드
        audit: 주어지면 fold별 (학습에 쓰인 row_id, 평가한 row_id)를 기록

    Returns:
        CvResult dict (folds, mean, std, fold_sizes)
    """
    family = family or model_id
    cfg = model_registry.make_config(family) if cfg is None else cfg
    folds = stratified_folds(train.labels, k, seed)

    reports = []
    for f, held_out in enumerate(folds):
        fit_idx = np.concatenate([folds[j] for j in range(k) if j != f])
        fit_idx.sort()
        fit_part, eval_part = train.take(fit_idx), train.take(held_out)

        stats = fit_scaler(fit_part)
        fit_part, eval_part = apply_scaler(fit_part, stats), apply_scaler(eval_part, stats)
        if audit is not None:
            audit.append({
                "stage": f"cv:{model_id}:{f}",
                "fitted_row_ids": stats.fitted_row_ids.tolist(),
                "evaluated_row_ids": eval_part.row_ids.tolist(),
            })

        model, elapsed = _timed_fit(family, fit_part, cfg, clock)
        scores = model_registry.predict_scores(model, eval_part.rows)
        reports.append(evaluate_scores(
            model_id, eval_part.labels, scores, model.threshold,
            train_time_seconds=elapsed, include_roc=False,
        ))
        log(f"[CV] {model_id} fold {f + 1}/{k}: accuracy={reports[-1]['accuracy']:.4f}")

    mean, std = aggregate(reports)
    return {
        "model_id": model_id,
        "k": int(k),
        "fold_sizes": [int(len(h)) for h in folds],
        "folds": reports,
        "mean": mean,
        "std": std,
    }


# ============== Pipeline ==============

@contextlib.contextmanager
def _stage(name: str):
    try:
        yield
    except PipelineStageError:
        raise
    except MalDetError as e:
        raise PipelineStageError(name, e) from e


def _load_source(plan: BenchmarkPlan) -> Dataset:
    if isinstance(plan.source, SynthSpec):
        return synth_generate(plan.source)
    if isinstance(plan.schema, FeatureSchema):
        schema = plan.schema
    elif plan.schema == "kaggle":
        schema = kaggle_schema(plan.label_column)
    else:
        schema = infer_schema(plan.source, plan.label_column)
    return load_csv(plan.source, schema)


def _trace_records(trace: Optional[pd.DataFrame]) -> Optional[list]:
    if trace is None:
        return None
    # 검증 세트가 없으면 val_* 컬럼은 NaN → null
    return trace.astype(object).where(trace.notna(), None).to_dict("records")


def _run_model(
    entry: RosterEntry,
    plan: BenchmarkPlan,
    train_sel: Dataset,
    train_std: Dataset,
    test_std: Dataset,
    audit: Optional[list],
    clock: str,
) -> dict:
    model_seed = derive_seed(plan.master_seed, entry.model_id)
    with _stage("fit"):
        cfg = model_registry.make_config(entry.family, entry.config, seed=model_seed)

    with _stage("cv"):
        cv = kfold_cv(
            train_sel, entry.model_id, entry.family, cfg,
            k=plan.cv_folds, seed=derive_seed(plan.master_seed, "cv"), audit=audit, clock=clock,
        )

    with _stage("fit"):
        model, elapsed = _timed_fit(entry.family, train_std, cfg, clock)
        log(f"[TRAIN] {entry.model_id}: {elapsed:.3f}s")

    with _stage("evaluate"):
        train_pred = model_registry.predict_labels(model, train_std.rows)
        train_accuracy = float(np.mean(train_pred == train_std.labels))
        scores = model_registry.predict_scores(model, test_std.rows)
        test = evaluate_scores(entry.model_id, test_std.labels, scores, model.threshold, train_time_seconds=elapsed)
    log(f"[BENCH] {entry.model_id}: cv={cv['mean']['accuracy']:.4f} test={test['accuracy']:.4f} "
        f"auc={test['auc'] if test['auc'] is None else round(test['auc'], 4)}")

    return {
        "model_id": entry.model_id,
        "family": entry.family,
        "config": model.config,
        "seed": model_seed,
        "cv": cv,
        "test": test,
        "train_time_seconds": float(elapsed),
        "train_accuracy": train_accuracy,
        "trace": _trace_records(model.trace),
    }


def run_benchmark(plan: BenchmarkPlan, audit: Optional[list] = None) -> dict:
    """
    전체 실험 절차를 실행합니다.

    순서: 적재/인코딩 → Z-score 필터(전체) → 학습/테스트 분할 → RFE(학습 분할) →
    모델별 교차검증(학습 분할) + 학습 분할 전체로 재학습 → 테스트 평가.

    Args:
        plan: BenchmarkPlan
        audit: 주어지면 모든 표준화/선택 통계에 사용된 row_id를 기록 (누수 검사용)

    Returns:
        BenchmarkReport dict
    """
    banner("Malware Detection Benchmark")

    with _stage("load"):
        data = _load_source(plan)
    log(f"[BENCH] {data.n_rows} rows × {data.n_features} features")

    with _stage("filter"):
        clean, prep_report = zscore_filter(data, plan.z_threshold)

    with _stage("split"):
        parts = split(clean, plan.ratio, plan.effective_split_seed, plan.stratified)

    with _stage("select"):
        k = clean.n_features if plan.rfe_k is None else plan.rfe_k
        rfe_result = rfe(
            parts.train, k=k, estimator=plan.rfe_estimator, step=plan.rfe_step,
            seed=derive_seed(plan.master_seed, "rfe"), audit=audit,
        )
        train_sel = apply_selection(parts.train, rfe_result)
        test_sel = apply_selection(parts.test, rfe_result)

    with _stage("fit"):
        stats = fit_scaler(train_sel)
        train_std, test_std = apply_scaler(train_sel, stats), apply_scaler(test_sel, stats)
    if audit is not None:
        audit.append({
            "stage": "final",
            "fitted_row_ids": stats.fitted_row_ids.tolist(),
            "evaluated_row_ids": test_std.row_ids.tolist(),
        })

    def run(entry):
        return _run_model(entry, plan, train_sel, train_std, test_std, audit, plan.clock)

    if config.N_JOBS > 1 and len(plan.roster) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=config.N_JOBS) as executor:
            models = list(executor.map(run, plan.roster))
    else:
        models = [run(entry) for entry in plan.roster]

    overlap = sorted(set(rfe_result["selected"]) & set(config.REFERENCE_TOP_FEATURES))
    return {
        "plan": plan.to_dict(),
        "environment": {
            "version": config.VERSION,
            "n_jobs": config.N_JOBS,
            "clock": plan.clock,
            "numpy": np.__version__,
            "pandas": pd.__version__,
        },
        "dataset": {
            "rows": data.n_rows,
            "features": data.columns,
            "provenance": data.provenance,
        },
        "preprocess": prep_report,
        "split": {
            "train_rows": parts.train.n_rows,
            "test_rows": parts.test.n_rows,
            "ratio": parts.ratio,
            "seed": parts.seed,
            "stratified": parts.stratified,
        },
        "scaler": stats.as_dict(),
        "rfe": rfe_result,
        "reference_overlap": {"count": len(overlap), "features": overlap},
        "protocol_notes": list(PROTOCOL_NOTES),
        "models": models,
    }


if __name__ == "__main__":
    demo_plan = BenchmarkPlan(
        source=SynthSpec(n_rows=600, n_features=6, n_informative=2, class_separation=4.0, seed=7),
        roster=("logreg", "knn", "constant"),
        rfe_k=None,
        cv_folds=3,
    )
    result = run_benchmark(demo_plan)
    for m in result["models"]:
        log(f"{m['model_id']}: test accuracy {m['test']['accuracy']:.4f}")
