"""
Step 2b: Feature Selection Module (특징 선택)
재귀적 특징 제거(RFE)로 상위 k개 특징을 고릅니다.
매 라운드마다 추정기를 다시 학습하고 중요도가 가장 낮은 특징을 제거합니다.
"""
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from dataclasses import replace
from typing import List, Optional

import numpy as np

import config
from modules.data import Dataset
from modules.preprocess import fit_scaler, apply_scaler
from modules import model_registry
from utils.console import log
from utils.errors import InvalidK, EstimatorLacksImportance, UnknownColumn


def project(data: Dataset, names: List[str]) -> Dataset:
    """주어진 이름 순서대로 컬럼을 추출합니다."""
    index = {name: j for j, name in enumerate(data.columns)}
    missing = [name for name in names if name not in index]
    if missing:
        raise UnknownColumn(f"columns not in dataset: {missing}")
    schema = replace(data.schema, columns=tuple((name, data.schema.kind_of(name)) for name in names))
    keep = set(names) | {data.schema.label_column}
    encodings = {name: codes for name, codes in data.encodings.items() if name in keep}
    return replace(
        data,
        schema=schema,
        rows=data.rows[:, [index[name] for name in names]],
        encodings=encodings,
    )


def _drop_order(names: List[str], importance: np.ndarray) -> List[str]:
    # 중요도 오름차순, 동률이면 사전순으로 뒤에 오는 이름부터
    by_name = sorted(zip(names, importance), key=lambda item: item[0], reverse=True)
    return [name for name, _ in sorted(by_name, key=lambda item: item[1])]


def rfe(
    train: Dataset,
    k: int = config.RFE_K,
    estimator: str = config.RFE_ESTIMATOR,
    estimator_config: Optional[dict] = None,
    step: int = config.RFE_STEP,
    seed: int = config.MASTER_SEED,
    audit: Optional[list] = None,
) -> dict:
    """
    재귀적 특징 제거를 수행합니다.

    추정기는 학습 데이터로 표준화한 행렬 위에서 학습합니다. 매 라운드 컬럼을 이름순으로
    정렬해 학습하므로 결과는 입력 컬럼 순서와 무관합니다.

    Args:
        train: 학습 데이터셋
        k: 남길 특징 수 (1 ≤ k ≤ 특징 수)
        estimator: 중요도를 제공하는 모델 계열 (logreg, svm, tree, forest)
        estimator_config: 추정기 설정 덮어쓰기
        step: 라운드당 제거할 특징 수
        seed: 추정기 시드
        audit: 주어지면 표준화 통계에 사용된 row_id를 기록

    Returns:
        RfeResult dict (selected, ranking, estimator_id, step, k, elimination_order)
    """
    n_features = train.n_features
    if not 1 <= k <= n_features:
        raise InvalidK(f"k must lie in [1, {n_features}], got {k}")
    if step < 1:
        raise InvalidK(f"step must be >= 1, got {step}")
    if estimator not in model_registry.IMPORTANCE_FAMILIES:
        raise EstimatorLacksImportance(
            f"'{estimator}' exposes no feature importance; use one of {list(model_registry.IMPORTANCE_FAMILIES)}"
        )

    cfg = model_registry.make_config(estimator, estimator_config, seed=seed)
    stats = fit_scaler(train)
    if audit is not None:
        audit.append({"stage": "select", "fitted_row_ids": stats.fitted_row_ids.tolist()})
    scaled = apply_scaler(train, stats)

    remaining = sorted(scaled.columns)
    eliminated = []
    round_no = 0
    while len(remaining) > k:
        round_no += 1
        model = model_registry.fit_model(estimator, project(scaled, remaining), cfg)
        importance = model_registry.feature_importance(model)
        n_drop = min(step, len(remaining) - k)
        dropped = _drop_order(remaining, importance)[:n_drop]
        eliminated.extend(dropped)
        remaining = [name for name in remaining if name not in set(dropped)]
        log(f"[RFE] round {round_no}: drop {dropped} ({len(remaining)} left)")

    # 먼저 제거된 특징일수록 큰 순위
    ranking = {name: 1 for name in remaining}
    for position, name in enumerate(eliminated):
        ranking[name] = len(eliminated) + 1 - position

    kept = set(remaining)
    selected = [name for name in train.columns if name in kept]
    log(f"[RFE] {estimator}: {n_features} → {len(selected)} features")
    return {
        "selected": selected,
        "ranking": {name: ranking[name] for name in train.columns},
        "estimator_id": estimator,
        "step": int(step),
        "k": int(k),
        "elimination_order": eliminated,
    }


def apply_selection(data: Dataset, result: dict) -> Dataset:
    """
    RFE 결과의 컬럼만 남깁니다. 원래 컬럼 순서를 유지합니다.
    """
    wanted = set(result["selected"])
    missing = sorted(wanted - set(data.columns))
    if missing:
        raise UnknownColumn(f"selected columns not in dataset: {missing}")
    return project(data, [name for name in data.columns if name in wanted])


if __name__ == "__main__":
    from modules.data import synth_generate, SynthSpec
    demo = synth_generate(SynthSpec(n_rows=400, n_features=6, n_informative=2, class_separation=4.0, seed=3))
    result = rfe(demo, k=2)
    log(f"[RFE] selected={result['selected']} ranking={result['ranking']}")
