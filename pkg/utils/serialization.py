"""
JSON serialization helpers
numpy 값을 JSON 호환 타입으로 변환하고, 결정적인 JSON 문자열을 생성합니다.
"""
import json
import os
import math

import numpy as np


def to_jsonable(obj):
    """numpy 배열/스칼라, dict, list, tuple을 재귀적으로 JSON 호환 값으로 변환합니다."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        if not math.isfinite(value):
            return None
        return value
    return obj


def dumps(obj) -> str:
    """정렬된 키와 고정 들여쓰기로 직렬화합니다 (바이트 단위 결정성)."""
    return json.dumps(to_jsonable(obj), ensure_ascii=False, indent=2, sort_keys=True)


def save_json(obj, path: str) -> str:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps(obj))
        f.write("\n")
    return path


def load_json(path: str):
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)
