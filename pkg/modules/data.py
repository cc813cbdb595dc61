"""
Step 1: Data Module (데이터 적재 및 합성)
프로세스 텔레메트리 CSV를 검증하여 적재하고, 테스트용 합성 데이터를 생성합니다.
"""
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

import config
from utils.console import log
from utils.errors import SchemaMismatch, ParseError, EmptyDataset, InvalidSpec
from utils.seeding import make_rng

NUMERIC = "numeric"
CATEGORICAL = "categorical"


@dataclass(frozen=True)
class FeatureSchema:
    """특징 컬럼 순서/종류와 라벨 컬럼 정의"""
    columns: Tuple[Tuple[str, str], ...]
    label_column: str = config.LABEL_COLUMN
    positive_label: str = config.POSITIVE_LABEL
    negative_label: str = config.NEGATIVE_LABEL

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple((str(n), str(k)) for n, k in self.columns))
        names = [name for name, _ in self.columns]
        if any(not name for name in names):
            raise SchemaMismatch("column names must be non-empty")
        if len(set(names)) != len(names):
            raise SchemaMismatch(f"duplicate column names in schema: {names}")
        if self.label_column in names:
            raise SchemaMismatch(f"label column '{self.label_column}' listed among features")
        for name, kind in self.columns:
            if kind not in (NUMERIC, CATEGORICAL):
                raise SchemaMismatch(f"column '{name}' has unknown kind '{kind}'")

    @property
    def feature_names(self) -> List[str]:
        return [name for name, _ in self.columns]

    def kind_of(self, name: str) -> str:
        return dict(self.columns)[name]

    def numeric_names(self) -> List[str]:
        return [name for name, kind in self.columns if kind == NUMERIC]

    def select(self, names: List[str]) -> "FeatureSchema":
        keep = set(names)
        return replace(self, columns=tuple(c for c in self.columns if c[0] in keep))

    def to_dict(self) -> dict:
        return {
            "columns": [[name, kind] for name, kind in self.columns],
            "label_column": self.label_column,
            "positive_label": self.positive_label,
            "negative_label": self.negative_label,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSchema":
        return cls(
            columns=tuple(tuple(c) for c in d["columns"]),
            label_column=d.get("label_column", config.LABEL_COLUMN),
            positive_label=d.get("positive_label", config.POSITIVE_LABEL),
            negative_label=d.get("negative_label", config.NEGATIVE_LABEL),
        )

    @classmethod
    def numeric(cls, names: List[str], **kwargs) -> "FeatureSchema":
        return cls(columns=tuple((n, NUMERIC) for n in names), **kwargs)


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    인코딩이 끝난 특징 행렬 + 이진 라벨 + 원본 행 번호.
    생성 후 배열은 읽기 전용입니다.
    """
    schema: FeatureSchema
    rows: np.ndarray
    labels: np.ndarray
    row_ids: np.ndarray
    encodings: Dict[str, Dict[str, int]] = field(default_factory=dict)
    provenance: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        rows = np.array(self.rows, dtype=np.float64, copy=True)
        if rows.ndim == 1:
            rows = rows.reshape(-1, max(1, len(self.schema.columns)))
        labels = np.array(self.labels, dtype=np.int64, copy=True).reshape(-1)
        row_ids = np.array(self.row_ids, dtype=np.int64, copy=True).reshape(-1)

        if rows.ndim != 2 or rows.shape[1] != len(self.schema.columns):
            raise SchemaMismatch(
                f"matrix shape {rows.shape} does not match {len(self.schema.columns)} schema columns"
            )
        if not (rows.shape[0] == labels.shape[0] == row_ids.shape[0]):
            raise SchemaMismatch(
                f"row count mismatch: rows={rows.shape[0]}, labels={labels.shape[0]}, row_ids={row_ids.shape[0]}"
            )
        if not np.all(np.isfinite(rows)):
            raise ParseError("non-finite value in feature matrix")
        if labels.size and not np.all((labels == 0) | (labels == 1)):
            raise ParseError("labels must be 0 (benign) or 1 (malware)")

        for arr in (rows, labels, row_ids):
            arr.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "row_ids", row_ids)

    @property
    def columns(self) -> List[str]:
        return self.schema.feature_names

    @property
    def n_rows(self) -> int:
        return int(self.rows.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.rows.shape[1])

    def take(self, indices) -> "Dataset":
        """위치 인덱스로 행을 추출합니다 (row_ids는 원본 값 유지)."""
        idx = np.asarray(indices, dtype=np.int64)
        return replace(
            self,
            rows=self.rows[idx],
            labels=self.labels[idx],
            row_ids=self.row_ids[idx],
        )

    def with_rows(self, rows: np.ndarray) -> "Dataset":
        return replace(self, rows=rows)

    def to_frame(self, decode: bool = True) -> pd.DataFrame:
        """
        원본 CSV 형태의 DataFrame으로 되돌립니다.

        Args:
            decode: True이면 범주형 컬럼과 라벨을 원래 텍스트로 복원
        """
        df = pd.DataFrame(self.rows, columns=self.columns)
        if decode:
            for name, kind in self.schema.columns:
                if kind == CATEGORICAL and name in self.encodings:
                    inverse = {code: text for text, code in self.encodings[name].items()}
                    df[name] = [inverse[int(v)] for v in df[name]]
            label_text = np.where(self.labels == 1, self.schema.positive_label, self.schema.negative_label)
            df[self.schema.label_column] = label_text
        else:
            df[self.schema.label_column] = self.labels
        return df


@dataclass(frozen=True)
class SynthSpec:
    """
    합성 데이터 생성 규격.
    pattern="gaussian": 정보 특징마다 클래스별 평균이 class_separation만큼 떨어짐
    pattern="xor": 정보 특징 쌍마다 사분면 XOR 패턴 (선형 분리 불가)
    """
    n_rows: int = 1000
    n_features: int = 10
    n_informative: int = 2
    class_separation: float = 2.0
    label_flip_rate: float = 0.0
    seed: int = config.MASTER_SEED
    pattern: str = "gaussian"

    def to_dict(self) -> dict:
        return {
            "n_rows": self.n_rows,
            "n_features": self.n_features,
            "n_informative": self.n_informative,
            "class_separation": self.class_separation,
            "label_flip_rate": self.label_flip_rate,
            "seed": self.seed,
            "pattern": self.pattern,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SynthSpec":
        return cls(**d)


def kaggle_schema(label_column: Optional[str] = None) -> FeatureSchema:
    """Kaggle PC 악성코드 데이터셋 스키마 (해시 컬럼은 불투명 범주형)"""
    columns = [(config.HASH_COLUMN, CATEGORICAL)]
    columns += [(name, NUMERIC) for name in config.KAGGLE_NUMERIC_FEATURES]
    return FeatureSchema(
        columns=tuple(columns),
        label_column=label_column or config.LABEL_COLUMN,
    )


def infer_schema(path: str, label_column: Optional[str] = None) -> FeatureSchema:
    """
    CSV 헤더에서 스키마를 추론합니다.
    해시 컬럼은 범주형, 라벨을 제외한 나머지는 수치형으로 봅니다.
    """
    label_column = label_column or config.LABEL_COLUMN
    if not os.path.exists(path):
        raise SchemaMismatch(f"file not found: {path}")
    try:
        header = list(pd.read_csv(path, nrows=0, encoding="utf-8").columns)
    except (pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise SchemaMismatch(f"cannot read header of {path}: {e}")
    if label_column not in header:
        raise SchemaMismatch(f"label column '{label_column}' not in header {header}")
    columns = [
        (name, CATEGORICAL if name == config.HASH_COLUMN else NUMERIC)
        for name in header if name != label_column
    ]
    return FeatureSchema(columns=tuple(columns), label_column=label_column)


def encode_labels(values: List[str]) -> Tuple[List[int], Dict[str, int]]:
    """
    범주형 값을 정수 코드로 변환합니다.
    코드는 고유값을 사전순(바이트 순서)으로 정렬해 0부터 부여하므로 입력 순서와 무관합니다.

    Args:
        values: 텍스트 값 리스트 (비어 있으면 안 됨)

    Returns:
        (codes, mapping)
    """
    if len(values) == 0:
        raise EmptyDataset("encode_labels requires at least one value")
    texts = [str(v) for v in values]
    distinct = sorted(set(texts), key=lambda s: s.encode("utf-8"))
    mapping = {text: code for code, text in enumerate(distinct)}
    return [mapping[t] for t in texts], mapping


def load_csv(path: str, schema: FeatureSchema) -> Dataset:
    """
    CSV 파일을 적재하여 Dataset으로 변환합니다.

    Args:
        path: UTF-8 CSV 경로 (첫 줄 헤더)
        schema: 기대 컬럼 스키마

    Returns:
        Dataset (범주형/라벨 컬럼은 encode_labels로 인코딩)
    """
    if not os.path.exists(path):
        raise SchemaMismatch(f"file not found: {path}")

    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise EmptyDataset(f"no header row in {path}")
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise ParseError(f"cannot parse {path}: {e}")

    header = [str(c) for c in raw.columns]
    expected = schema.feature_names + [schema.label_column]
    missing = [c for c in expected if c not in header]
    extra = [c for c in header if c not in expected]
    if missing or extra:
        raise SchemaMismatch(f"header mismatch in {path}: missing={missing}, extra={extra}")
    if len(raw) == 0:
        raise EmptyDataset(f"no data rows in {path}")

    n = len(raw)
    matrix = np.empty((n, len(schema.columns)), dtype=np.float64)
    encodings = {}

    for j, (name, kind) in enumerate(schema.columns):
        tokens = raw[name].str.strip()
        if kind == NUMERIC:
            values = pd.to_numeric(tokens, errors="coerce").to_numpy(dtype=np.float64)
            bad = ~np.isfinite(values)
            if bad.any():
                i = int(np.argmax(bad))
                raise ParseError(
                    f"non-numeric token '{tokens.iloc[i]}' at line {i + 2}", row=i, column=name
                )
            matrix[:, j] = values
        else:
            if (tokens == "").any():
                i = int(np.argmax((tokens == "").to_numpy()))
                raise ParseError(f"missing value at line {i + 2}", row=i, column=name)
            codes, mapping = encode_labels(tokens.tolist())
            matrix[:, j] = codes
            encodings[name] = mapping

    label_tokens = raw[schema.label_column].str.strip()
    allowed = {schema.positive_label, schema.negative_label}
    unknown = ~label_tokens.isin(allowed)
    if unknown.any():
        i = int(np.argmax(unknown.to_numpy()))
        raise ParseError(
            f"label '{label_tokens.iloc[i]}' is not one of {sorted(allowed)}",
            row=i, column=schema.label_column,
        )
    # 사전순 코드가 양성=1과 어긋나면 (라벨명을 바꾼 경우) 양성=1을 우선합니다
    _, label_mapping = encode_labels(label_tokens.tolist())
    labels = (label_tokens == schema.positive_label).to_numpy().astype(np.int64)
    if label_mapping.get(schema.positive_label, 1) != 1 or len(label_mapping) == 1:
        label_mapping = {schema.negative_label: 0, schema.positive_label: 1}
    encodings[schema.label_column] = label_mapping

    log(f"[DATA] {os.path.basename(path)}: {n}개 행, {len(schema.columns)}개 특징 적재")

    return Dataset(
        schema=schema,
        rows=matrix,
        labels=labels,
        row_ids=np.arange(n),
        encodings=encodings,
        provenance={"source": "csv", "path": os.path.abspath(path)},
    )


def save_csv(data: Dataset, path: str) -> str:
    """Dataset을 원본 형식 CSV로 저장합니다 (숫자는 17자리 유효숫자)."""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    frame = data.to_frame(decode=True)
    frame.to_csv(path, index=False, float_format="%.17g", encoding="utf-8")
    return path


def synth_generate(spec: SynthSpec) -> Dataset:
    """
    두 클래스 가우시안 군집 데이터를 생성합니다.

    Args:
        spec: 합성 규격 (시드가 같으면 결과도 동일)

    Returns:
        클래스가 균형 잡힌 Dataset (|양성 - 음성| <= 1)
    """
    if spec.n_rows < 2 or spec.n_features < 1:
        raise InvalidSpec(f"need n_rows >= 2 and n_features >= 1, got {spec.n_rows}, {spec.n_features}")
    if not 0 <= spec.n_informative <= spec.n_features:
        raise InvalidSpec(f"n_informative={spec.n_informative} must lie in [0, n_features]")
    if spec.class_separation < 0:
        raise InvalidSpec("class_separation must be non-negative")
    if not 0 <= spec.label_flip_rate < 1:
        raise InvalidSpec("label_flip_rate must lie in [0, 1)")
    if spec.pattern not in ("gaussian", "xor"):
        raise InvalidSpec(f"unknown pattern '{spec.pattern}'")
    if spec.pattern == "xor" and (spec.n_informative < 2 or spec.n_informative % 2):
        raise InvalidSpec("xor pattern needs an even n_informative >= 2")

    rng = make_rng(spec.seed)
    n, d = spec.n_rows, spec.n_features
    n_pos = n // 2
    labels = np.zeros(n, dtype=np.int64)
    labels[:n_pos] = 1
    labels = rng.permutation(labels)

    rows = rng.standard_normal((n, d))
    half = spec.class_separation / 2.0
    if spec.pattern == "gaussian":
        shift = np.where(labels == 1, half, -half)
        rows[:, :spec.n_informative] += shift[:, None]
    else:
        for a in range(0, spec.n_informative, 2):
            # 클래스 0: 같은 부호 사분면, 클래스 1: 다른 부호 사분면
            sign_a = rng.choice([-1.0, 1.0], size=n)
            sign_b = np.where(labels == 1, -sign_a, sign_a)
            rows[:, a] += sign_a * half
            rows[:, a + 1] += sign_b * half

    # 양쪽 클래스에서 같은 수만큼 뒤집어 균형 유지
    n_flip_each = int(round(spec.label_flip_rate * n / 2.0))
    if n_flip_each:
        pos_idx = np.flatnonzero(labels == 1)
        neg_idx = np.flatnonzero(labels == 0)
        n_flip_each = min(n_flip_each, len(pos_idx), len(neg_idx))
        flip_pos = rng.choice(pos_idx, size=n_flip_each, replace=False)
        flip_neg = rng.choice(neg_idx, size=n_flip_each, replace=False)
        labels[flip_pos] = 0
        labels[flip_neg] = 1

    width = max(2, len(str(d - 1)))
    names = [f"f{i:0{width}d}" for i in range(d)]
    schema = FeatureSchema.numeric(names)

    return Dataset(
        schema=schema,
        rows=rows,
        labels=labels,
        row_ids=np.arange(n),
        encodings={schema.label_column: {schema.negative_label: 0, schema.positive_label: 1}},
        provenance={
            "source": "synth",
            "spec": spec.to_dict(),
            "informative": names[:spec.n_informative],
        },
    )


if __name__ == "__main__":
    demo = synth_generate(SynthSpec(n_rows=10, n_features=3, n_informative=1, class_separation=4.0, seed=7))
    print(demo.to_frame())
