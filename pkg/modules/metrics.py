"""
Step 5: Evaluation Metrics Module (평가 지표)
혼동 행렬, 정확도/정밀도/재현율/F1, ROC 곡선과 AUC, MCC, Cohen's Kappa를 계산합니다.
양성 클래스는 항상 악성코드(1)입니다.
"""
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from utils.errors import LengthMismatch, NonBinaryValue, SingleClass, NonFiniteScore


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def swapped(self) -> "ConfusionMatrix":
        """라벨과 예측 모두에서 클래스를 맞바꾼 혼동 행렬"""
        return ConfusionMatrix(tp=self.tn, fp=self.fn, fn=self.fp, tn=self.tp)

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}

    def to_frame(self) -> pd.DataFrame:
        """행: 실제 (benign, malware), 열: 예측 (benign, malware)"""
        return pd.DataFrame(
            [[self.tn, self.fp], [self.fn, self.tp]],
            index=["actual_benign", "actual_malware"],
            columns=["pred_benign", "pred_malware"],
        )


@dataclass(frozen=True)
class RocCurve:
    """(fpr, tpr, threshold) 점 목록. (0,0)에서 시작해 (1,1)에서 끝납니다."""
    points: List[Tuple[float, float, float]]
    auc: float

    def to_dict(self) -> dict:
        return {"points": [list(p) for p in self.points], "auc": self.auc}

    @classmethod
    def from_dict(cls, d: dict) -> "RocCurve":
        return cls(points=[tuple(float(v) for v in p) for p in d["points"]], auc=float(d["auc"]))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.points, columns=["fpr", "tpr", "threshold"])


def _as_binary(values, name: str) -> np.ndarray:
    arr = np.asarray(values)
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise NonBinaryValue(f"{name} must contain only 0 and 1")
    return arr.astype(np.int64)


def confusion(labels, predictions) -> ConfusionMatrix:
    """
    혼동 행렬을 계산합니다.

    Args:
        labels: 실제 라벨 (0/1)
        predictions: 예측 라벨 (0/1)
    """
    if len(labels) != len(predictions):
        raise LengthMismatch(f"labels ({len(labels)}) and predictions ({len(predictions)}) differ in length")
    if len(labels) == 0:
        raise LengthMismatch("confusion needs at least one row")
    y = _as_binary(labels, "labels")
    p = _as_binary(predictions, "predictions")
    return ConfusionMatrix(
        tp=int(np.sum((y == 1) & (p == 1))),
        fp=int(np.sum((y == 0) & (p == 1))),
        fn=int(np.sum((y == 1) & (p == 0))),
        tn=int(np.sum((y == 0) & (p == 0))),
    )


def _ratio(num: int, den: int, name: str, flags: Optional[list]) -> float:
    if den == 0:
        if flags is not None:
            flags.append(name)
        return 0.0
    return num / den


def scalar_metrics(cm: ConfusionMatrix) -> dict:
    """
    accuracy, precision, recall, F1을 계산합니다.
    분모가 0이면 0을 반환하고 degenerate 목록에 지표명을 남깁니다.
    """
    flags = []
    accuracy = _ratio(cm.tp + cm.tn, cm.total, "accuracy", flags)
    precision = _ratio(cm.tp, cm.tp + cm.fp, "precision", flags)
    recall = _ratio(cm.tp, cm.tp + cm.fn, "recall", flags)
    # 조화평균 2PR/(P+R) = 2TP/(2TP+FP+FN)
    f1 = _ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn, "f1", flags)
    return {
        "accuracy": accuracy,
        "precision": precision,
        "recall": recall,
        "f1": f1,
        "degenerate": flags,
    }


def mcc(cm: ConfusionMatrix, flags: Optional[list] = None) -> float:
    """
    Matthews 상관계수. 분모 인수 중 하나라도 0이면 0 (degenerate).
    정수 곱을 Python int로 계산해 overflow가 없습니다.
    """
    factors = [cm.tp + cm.fp, cm.tp + cm.fn, cm.tn + cm.fp, cm.tn + cm.fn]
    if any(f == 0 for f in factors):
        if flags is not None:
            flags.append("mcc")
        return 0.0
    numerator = cm.tp * cm.tn - cm.fp * cm.fn
    denominator = math.sqrt(factors[0] * factors[1]) * math.sqrt(factors[2] * factors[3])
    return max(-1.0, min(1.0, numerator / denominator))


def kappa(cm: ConfusionMatrix, flags: Optional[list] = None) -> float:
    """Cohen's Kappa = (po - pe) / (1 - pe). pe = 1이면 0 (degenerate)."""
    n = cm.total
    po = (cm.tp + cm.tn) / n
    pe_num = (cm.tp + cm.fp) * (cm.tp + cm.fn) + (cm.fn + cm.tn) * (cm.fp + cm.tn)
    if pe_num == n * n:
        if flags is not None:
            flags.append("kappa")
        return 0.0
    pe = pe_num / (n * n)
    return (po - pe) / (1.0 - pe)


def _check_scores(labels, scores) -> Tuple[np.ndarray, np.ndarray]:
    if len(labels) != len(scores):
        raise LengthMismatch(f"labels ({len(labels)}) and scores ({len(scores)}) differ in length")
    y = _as_binary(labels, "labels")
    s = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(s)):
        raise NonFiniteScore("scores must be finite")
    n_pos = int(y.sum())
    if n_pos == 0 or n_pos == len(y):
        raise SingleClass("AUC is undefined unless both classes are present")
    return y, s


def roc_auc(labels, scores) -> RocCurve:
    """
    ROC 곡선과 사다리꼴 AUC.
    점수 내림차순으로 고유 임계값을 순회하며, 같은 점수는 하나의 점으로 묶입니다.
    면적은 정수 누적으로 계산하여 쌍별 일치 확률(동점 ½)과 정확히 같습니다.
    """
    y, s = _check_scores(labels, scores)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos

    order = np.argsort(-s, kind="stable")
    s_sorted, y_sorted = s[order], y[order]
    # 각 고유 점수 그룹의 마지막 위치
    last = np.r_[np.flatnonzero(np.diff(s_sorted) != 0), len(s_sorted) - 1]
    tps = np.cumsum(y_sorted)[last]
    fps = (last + 1) - tps

    tp_all = np.r_[0, tps].astype(np.int64)
    fp_all = np.r_[0, fps].astype(np.int64)
    # 첫 점 (0,0)의 임계값은 최고 점수 + 1
    thresholds = np.r_[s_sorted[0] + 1.0, s_sorted[last]]

    # 2 * 면적 * P * N = Σ ΔFP * (TP_i + TP_{i-1}) (정수)
    twice_area = int(np.sum(np.diff(fp_all) * (tp_all[1:] + tp_all[:-1])))
    auc = twice_area / (2.0 * n_pos * n_neg)

    points = [
        (float(fp) / n_neg, float(tp) / n_pos, float(t))
        for tp, fp, t in zip(tp_all, fp_all, thresholds)
    ]
    return RocCurve(points=points, auc=auc)


def pairwise_auc(labels, scores) -> float:
    """
    양성이 음성보다 높은 점수를 받을 확률 (동점은 ½). 중간 순위(midrank) 합으로 계산합니다.
    """
    y, s = _check_scores(labels, scores)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    ranks = pd.Series(s).rank(method="average").to_numpy()
    rank_sum = float(ranks[y == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def evaluate_scores(
    model_id: str,
    labels,
    scores,
    threshold: float,
    train_time_seconds: float = 0.0,
    include_roc: bool = True,
) -> dict:
    """
    점수 벡터로 EvalReport를 만듭니다. 라벨은 score >= threshold이면 1입니다.

    Returns:
        EvalReport dict (cm, 스칼라 지표, auc, mcc, kappa, 학습 시간, [roc])
    """
    y = _as_binary(labels, "labels")
    s = np.asarray(scores, dtype=np.float64)
    predictions = (s >= threshold).astype(np.int64)
    cm = confusion(y, predictions)
    scalars = scalar_metrics(cm)
    flags = list(scalars.pop("degenerate"))

    try:
        roc = roc_auc(y, s)
        auc_value = roc.auc
    except SingleClass:
        roc = None
        auc_value = None
        flags.append("auc")

    report = {
        "model_id": model_id,
        "cm": cm.to_dict(),
        **scalars,
        "auc": auc_value,
        "mcc": mcc(cm, flags),
        "kappa": kappa(cm, flags),
        "train_time_seconds": float(train_time_seconds),
        "n_rows": cm.total,
        "degenerate": flags,
    }
    if include_roc:
        report["roc"] = roc.to_dict() if roc is not None else None
    return report


SCALAR_KEYS = ["accuracy", "precision", "recall", "f1", "auc", "mcc", "kappa", "train_time_seconds"]
