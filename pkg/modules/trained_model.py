"""
Trained model container shared by every classifier family
"""
from dataclasses import dataclass, field
from typing import Optional, Tuple

import pandas as pd

# 확률 점수 모델은 0.5, 마진 점수 모델(svm)은 0에서 라벨을 나눕니다
MARGIN_FAMILIES = ("svm",)


@dataclass(frozen=True, eq=False)
class TrainedModel:
    family: str
    config: dict
    params: dict
    columns: Tuple[str, ...] = ()
    trace: Optional[pd.DataFrame] = field(default=None, repr=False)

    @property
    def threshold(self) -> float:
        return 0.0 if self.family in MARGIN_FAMILIES else 0.5

    @property
    def n_inputs(self) -> int:
        return len(self.columns)
