"""
Model Registry (모델 레지스트리)
모델 계열 이름 → (설정 클래스, 학습 함수, 점수 함수)를 연결하고,
TrainedModel의 JSON 직렬화를 담당합니다.
"""
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import dataclasses
from typing import Optional, Tuple

import numpy as np

import config
from modules.data import Dataset
from modules.preprocess import ScalerStats
from modules.trained_model import TrainedModel
from modules import models_classic as mc
from modules import models_neural as mn
from utils.errors import InvalidConfig, EstimatorLacksImportance, IoError
from utils.serialization import to_jsonable, save_json, load_json

CONFIG_CLASSES = {
    "logreg": mc.LogRegConfig,
    "knn": mc.KnnConfig,
    "tree": mc.TreeConfig,
    "forest": mc.ForestConfig,
    "svm": mc.LinearSvmConfig,
    "constant": mc.ConstantConfig,
    "mlp": mn.NetConfig,
    "dnn": mn.NetConfig,
}

FAMILY_DEFAULTS = {
    "logreg": config.LOGREG_DEFAULTS,
    "knn": config.KNN_DEFAULTS,
    "tree": config.TREE_DEFAULTS,
    "forest": config.FOREST_DEFAULTS,
    "svm": config.SVM_DEFAULTS,
    "constant": {},
    "mlp": config.MLP_DEFAULTS,
    "dnn": config.DNN_DEFAULTS,
}

SCORERS = {
    "logreg": mc.logreg_scores,
    "knn": mc.knn_predict,
    "tree": mc.tree_scores,
    "forest": mc.forest_scores,
    "svm": mc.svm_scores,
    "constant": mc.constant_scores,
    "mlp": mn.net_scores,
    "dnn": mn.net_scores,
}

IMPORTANCE_FAMILIES = ("logreg", "svm", "tree", "forest")
NET_FAMILIES = ("mlp", "dnn")


def _check_family(family: str):
    if family not in CONFIG_CLASSES:
        raise InvalidConfig(f"unknown model family '{family}' (choose from {sorted(CONFIG_CLASSES)})")


def make_config(family: str, overrides: Optional[dict] = None, seed: Optional[int] = None):
    """
    계열 기본값 위에 overrides를 덮어써 설정 객체를 만듭니다.

    Args:
        family: 모델 계열 이름
        overrides: 부분 설정 (알 수 없는 키는 InvalidConfig)
        seed: 주어지면 seed 필드를 덮어씀 (seed 필드가 있는 계열만)
    """
    _check_family(family)
    cls = CONFIG_CLASSES[family]
    names = {f.name for f in dataclasses.fields(cls)}
    values = dict(FAMILY_DEFAULTS[family])
    overrides = dict(overrides or {})
    if "lambda" in overrides:
        overrides["lam"] = overrides.pop("lambda")
    unknown = sorted(set(overrides) - names)
    if unknown:
        raise InvalidConfig(f"unknown {family} config keys: {unknown}")
    values.update(overrides)
    if seed is not None and "seed" in names:
        values["seed"] = int(seed)
    try:
        return cls(**values)
    except TypeError as e:
        raise InvalidConfig(f"bad {family} config: {e}")


def fit_model(family: str, train: Dataset, cfg=None) -> TrainedModel:
    """
    공통 학습 진입점. 신경망 계열은 학습 이력을 TrainedModel.trace에 담습니다.
    """
    _check_family(family)
    cfg = make_config(family) if cfg is None else cfg
    if family == "logreg":
        return mc.logreg_fit(train, cfg)
    if family == "knn":
        return mc.knn_fit(train, cfg)
    if family == "tree":
        return mc.tree_fit(train, cfg)
    if family == "forest":
        return mc.forest_fit(train, cfg)
    if family == "svm":
        return mc.svm_fit(train, cfg)
    if family == "constant":
        return mc.constant_fit(train, cfg)
    model, _ = mn.net_fit(train, cfg, family=family)
    return model


def predict_scores(model: TrainedModel, rows: np.ndarray) -> np.ndarray:
    """점수가 클수록 악성코드에 가깝습니다."""
    _check_family(model.family)
    return SCORERS[model.family](model, rows)


def labels_from_scores(model: TrainedModel, scores: np.ndarray) -> np.ndarray:
    # 임계값과 같은 점수는 1로 판정
    return (np.asarray(scores) >= model.threshold).astype(np.int64)


def predict_labels(model: TrainedModel, rows: np.ndarray) -> np.ndarray:
    return labels_from_scores(model, predict_scores(model, rows))


def feature_importance(model: TrainedModel) -> np.ndarray:
    """
    특징별 중요도. 선형 모델은 |계수|, 트리 계열은 불순도 감소 중요도입니다.
    """
    if model.family in ("logreg", "svm"):
        return np.abs(np.asarray(model.params["w"], dtype=np.float64))
    if model.family == "tree":
        return mc.tree_importance([model.params["tree"]])
    if model.family == "forest":
        return mc.tree_importance(model.params["trees"])
    raise EstimatorLacksImportance(f"model family '{model.family}' exposes no feature importance")


# ============== JSON serialization ==============

def _tree_to_nested(tree: dict, node: int = 0) -> dict:
    feature = int(tree["feature"][node])
    if feature < 0:
        return {"leaf_score": float(tree["value"][node])}
    return {
        "feature": feature,
        "threshold": float(tree["threshold"][node]),
        "left": _tree_to_nested(tree, int(tree["left"][node])),
        "right": _tree_to_nested(tree, int(tree["right"][node])),
    }


def _tree_from_nested(root: dict, importance) -> dict:
    feature, threshold, left, right, value = [], [], [], [], []
    stack = [(root, None, None)]
    while stack:
        record, parent, side = stack.pop()
        idx = len(feature)
        if parent is not None:
            (left if side == "left" else right)[parent] = idx
        if "leaf_score" in record:
            feature.append(-1)
            threshold.append(0.0)
            value.append(float(record["leaf_score"]))
        else:
            feature.append(int(record["feature"]))
            threshold.append(float(record["threshold"]))
            value.append(0.0)
        left.append(-1)
        right.append(-1)
        if "leaf_score" not in record:
            stack.append((record["right"], idx, "right"))
            stack.append((record["left"], idx, "left"))
    return {
        "feature": np.array(feature, dtype=np.int64),
        "threshold": np.array(threshold, dtype=np.float64),
        "left": np.array(left, dtype=np.int64),
        "right": np.array(right, dtype=np.int64),
        "value": np.array(value, dtype=np.float64),
        "importance": np.asarray(importance, dtype=np.float64),
    }


def model_to_dict(model: TrainedModel, scaler: Optional[ScalerStats] = None) -> dict:
    """
    TrainedModel → {family, config, columns, parameters | layers}.
    scaler가 주어지면 평가 시 같은 표준화를 재현할 수 있도록 함께 저장합니다.
    """
    out = {
        "family": model.family,
        "config": to_jsonable(model.config),
        "columns": list(model.columns),
    }
    if scaler is not None:
        out["scaler"] = {"columns": list(scaler.columns), "mean": to_jsonable(scaler.mean), "std": to_jsonable(scaler.std)}
    if model.family in NET_FAMILIES:
        out["layers"] = to_jsonable(model.params["layers"])
        return out
    if model.family == "tree":
        tree = model.params["tree"]
        params = {"root": _tree_to_nested(tree), "importance": tree["importance"]}
    elif model.family == "forest":
        params = {
            "trees": [
                {"root": _tree_to_nested(tree), "importance": tree["importance"]}
                for tree in model.params["trees"]
            ]
        }
    else:
        params = model.params
    out["parameters"] = to_jsonable(params)
    return out


def model_from_dict(d: dict) -> TrainedModel:
    family = d.get("family")
    _check_family(family)
    columns = tuple(d.get("columns", []))
    cfg = dict(d.get("config", {}))

    if family in NET_FAMILIES:
        params = {
            "layers": [
                {"W": np.asarray(layer["W"], dtype=np.float64), "b": np.asarray(layer["b"], dtype=np.float64)}
                for layer in d["layers"]
            ]
        }
    elif family == "tree":
        p = d["parameters"]
        params = {"tree": _tree_from_nested(p["root"], p["importance"])}
    elif family == "forest":
        params = {"trees": [_tree_from_nested(t["root"], t["importance"]) for t in d["parameters"]["trees"]]}
    elif family == "knn":
        p = d["parameters"]
        params = {"X": np.asarray(p["X"], dtype=np.float64).reshape(-1, len(columns)), "y": np.asarray(p["y"], dtype=np.int64)}
    elif family in ("logreg", "svm"):
        p = d["parameters"]
        params = {"w": np.asarray(p["w"], dtype=np.float64), "b": float(p["b"]),
                  "loss_history": list(p.get("loss_history", []))}
    else:
        params = {"rate": float(d["parameters"]["rate"])}
    return TrainedModel(family=family, config=cfg, params=params, columns=columns)


def scaler_from_dict(d: dict) -> Optional[ScalerStats]:
    record = d.get("scaler")
    if record is None:
        return None
    return ScalerStats(
        columns=tuple(record["columns"]),
        mean=np.asarray(record["mean"], dtype=np.float64),
        std=np.asarray(record["std"], dtype=np.float64),
        fitted_row_ids=np.zeros(0, dtype=np.int64),
    )


def save_model(model: TrainedModel, path: str, scaler: Optional[ScalerStats] = None) -> str:
    try:
        return save_json(model_to_dict(model, scaler), path)
    except OSError as e:
        raise IoError(f"cannot write model to {path}: {e}")


def load_model(path: str) -> Tuple[TrainedModel, Optional[ScalerStats]]:
    """모델 JSON을 읽어 (TrainedModel, 저장된 ScalerStats 또는 None)을 반환합니다."""
    try:
        d = load_json(path)
        return model_from_dict(d), scaler_from_dict(d)
    except OSError as e:
        raise IoError(f"cannot read model from {path}: {e}")
    except (KeyError, TypeError, ValueError) as e:
        raise InvalidConfig(f"malformed model file {path}: {e}")
