"""
Step 2: Preprocessing Module (전처리)
Z-score 이상치 제거, 표준화, 학습/테스트 분할을 수행합니다.
"""
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import re
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

import config
from modules.data import Dataset, NUMERIC, CATEGORICAL
from utils.console import log
from utils.errors import EmptyResult, InvalidConfig, InvalidRatio, InsufficientClassRows
from utils.seeding import make_rng

_HEX_DIGEST = re.compile(r"^[0-9a-fA-F]+$")


@dataclass(frozen=True)
class Split:
    train: Dataset
    test: Dataset
    ratio: float
    seed: int
    stratified: bool


@dataclass(frozen=True)
class ScalerStats:
    """
    학습 데이터에서 추정한 컬럼별 평균/표준편차.
    fitted_row_ids는 통계 추정에 사용된 원본 행 번호입니다 (누수 검사용).
    """
    columns: Tuple[str, ...]
    mean: np.ndarray
    std: np.ndarray
    fitted_row_ids: np.ndarray

    def as_dict(self) -> Dict[str, Dict[str, float]]:
        return {
            name: {"mean": float(m), "std": float(s)}
            for name, m, s in zip(self.columns, self.mean, self.std)
        }


def _population_stats(matrix: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    mean = matrix.mean(axis=0)
    std = matrix.std(axis=0, ddof=0)
    return mean, std


def looks_like_hash(categories: List[str]) -> bool:
    """모든 값이 같은 길이(32자 이상)의 16진 문자열이면 해시 다이제스트로 간주합니다."""
    if not categories:
        return False
    lengths = {len(c) for c in categories}
    if len(lengths) != 1 or lengths.pop() < 32:
        return False
    return all(_HEX_DIGEST.match(c) for c in categories)


def zscore_filter(data: Dataset, threshold: float = config.Z_THRESHOLD) -> Tuple[Dataset, dict]:
    """
    Z-score 기준으로 이상치 행을 제거합니다.
    통계는 입력 전체에 대해 한 번만 계산하며, 어느 한 수치 컬럼이라도 |z| > threshold이면 제거합니다.

    Args:
        data: 입력 데이터셋
        threshold: |z| 임계값 (기본 3.0, inf 허용)

    Returns:
        (필터링된 Dataset, PreprocessReport dict)
    """
    if not threshold > 0:
        raise InvalidConfig(f"z threshold must be > 0, got {threshold}")
    if data.n_rows == 0:
        raise EmptyResult("zscore_filter received an empty dataset")

    numeric_idx = [j for j, (_, kind) in enumerate(data.schema.columns) if kind == NUMERIC]
    block = data.rows[:, numeric_idx]
    mean, std = _population_stats(block)

    z = np.zeros_like(block)
    nonconst = std > 0
    # σ = 0 컬럼은 z = 0
    z[:, nonconst] = (block[:, nonconst] - mean[nonconst]) / std[nonconst]
    outlier = np.abs(z) > threshold
    remove_mask = outlier.any(axis=1)

    keep = np.flatnonzero(~remove_mask)
    if keep.size == 0:
        raise EmptyResult(f"every row exceeds |z| > {threshold}")

    names = [data.columns[j] for j in numeric_idx]
    notes = []
    for name, kind in data.schema.columns:
        if kind == CATEGORICAL and looks_like_hash(list(data.encodings.get(name, {}))):
            notes.append(f"column {name} treated as opaque categorical (hash not invertible)")

    report = {
        "rows_in": data.n_rows,
        "rows_removed": int(remove_mask.sum()),
        "rows_out": int(keep.size),
        "removed_row_ids": data.row_ids[remove_mask].tolist(),
        "z_threshold": float(threshold),
        "per_column_stats": {
            name: {"mean": float(m), "std": float(s)} for name, m, s in zip(names, mean, std)
        },
        "removed_by_column": {
            name: int(count) for name, count in zip(names, outlier.sum(axis=0)) if count
        },
        "notes": notes,
    }

    log(f"[PREPROCESS] Z-score > {threshold}: {report['rows_removed']}/{data.n_rows}개 행 제거")
    return data.take(keep), report


def fit_scaler(train: Dataset) -> ScalerStats:
    if train.n_rows == 0:
        raise EmptyResult("cannot fit a scaler on an empty training set")
    mean, std = _population_stats(train.rows)
    return ScalerStats(
        columns=tuple(train.columns),
        mean=mean,
        std=std,
        fitted_row_ids=train.row_ids.copy(),
    )


def apply_scaler(data: Dataset, stats: ScalerStats) -> Dataset:
    """(x - μ) / σ 변환. σ = 0 컬럼은 0으로 채웁니다."""
    safe_std = np.where(stats.std > 0, stats.std, 1.0)
    scaled = (data.rows - stats.mean) / safe_std
    scaled[:, stats.std == 0] = 0.0
    return data.with_rows(scaled)


def inverse_scaler(data: Dataset, stats: ScalerStats) -> Dataset:
    restored = data.rows * np.where(stats.std > 0, stats.std, 0.0) + stats.mean
    return data.with_rows(restored)


def standardize(train: Dataset, test: Dataset) -> Tuple[Dataset, Dataset, ScalerStats]:
    """
    학습 데이터 통계로 학습/테스트 데이터를 표준화합니다.
    인코딩된 범주형 컬럼도 수치로 취급하여 함께 변환합니다.

    Returns:
        (표준화된 train, 표준화된 test, ScalerStats)
    """
    stats = fit_scaler(train)
    return apply_scaler(train, stats), apply_scaler(test, stats), stats


def _allocate_stratified(counts: List[int], ratio: float, total_train: int) -> List[int]:
    """
    클래스별 학습 행 수를 정합니다: floor(ratio * n_c)에서 시작해
    남은 몫을 소수부가 큰 클래스부터 한 행씩 배분합니다.
    """
    exact = [ratio * c for c in counts]
    alloc = [int(np.floor(e)) for e in exact]
    remainder = total_train - sum(alloc)
    order = sorted(range(len(counts)), key=lambda i: (-(exact[i] - alloc[i]), i))
    for i in order:
        if remainder <= 0:
            break
        if alloc[i] < counts[i]:
            alloc[i] += 1
            remainder -= 1
    return alloc


def split(
    data: Dataset,
    ratio: float = config.SPLIT_RATIO,
    seed: int = config.MASTER_SEED,
    stratified: bool = config.STRATIFIED
) -> Split:
    """
    시드 기반 셔플 후 학습/테스트로 분할합니다.

    Args:
        data: 입력 데이터셋
        ratio: 학습 비율 (0 < ratio < 1)
        seed: 분할 시드
        stratified: 클래스 비율 유지 여부

    Returns:
        Split (train 크기 = floor(ratio * n))
    """
    if not 0 < ratio < 1:
        raise InvalidRatio(f"split ratio must lie in (0, 1), got {ratio}")

    n = data.n_rows
    rng = make_rng(seed, "split")
    total_train = int(np.floor(ratio * n))

    if stratified:
        classes = [np.flatnonzero(data.labels == c) for c in (0, 1)]
        if any(len(idx) == 0 for idx in classes):
            raise InsufficientClassRows(
                f"stratified split needs both classes, got counts {[len(i) for i in classes]}"
            )
        alloc = _allocate_stratified([len(idx) for idx in classes], ratio, total_train)
        train_parts, test_parts = [], []
        for idx, n_train in zip(classes, alloc):
            shuffled = rng.permutation(idx)
            train_parts.append(shuffled[:n_train])
            test_parts.append(shuffled[n_train:])
        train_idx = np.concatenate(train_parts)
        test_idx = np.concatenate(test_parts)
    else:
        shuffled = rng.permutation(n)
        train_idx, test_idx = shuffled[:total_train], shuffled[total_train:]

    train_idx.sort()
    test_idx.sort()
    log(f"[PREPROCESS] 분할: train {len(train_idx)} / test {len(test_idx)} (ratio={ratio}, stratified={stratified})")

    return Split(
        train=data.take(train_idx),
        test=data.take(test_idx),
        ratio=float(ratio),
        seed=int(seed),
        stratified=bool(stratified),
    )
