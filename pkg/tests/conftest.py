"""
Shared fixtures: small synthetic datasets and CSV helpers.
"""
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest

import config

config.VERBOSE = False

from modules.data import Dataset, FeatureSchema, SynthSpec, synth_generate


@pytest.fixture
def make_dataset():
    """(rows, labels, names) → numeric Dataset with row_ids 0..n-1"""
    def _make(rows, labels, names=None):
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim == 1:
            rows = rows[:, None]
        names = names or [f"x{j}" for j in range(rows.shape[1])]
        return Dataset(
            schema=FeatureSchema.numeric(names),
            rows=rows,
            labels=np.asarray(labels),
            row_ids=np.arange(len(rows)),
        )
    return _make


@pytest.fixture
def gaussian_data():
    return synth_generate(SynthSpec(n_rows=400, n_features=5, n_informative=2, class_separation=4.0, seed=1))


@pytest.fixture
def separable_data():
    return synth_generate(SynthSpec(n_rows=1000, n_features=6, n_informative=2, class_separation=8.0, seed=2))


@pytest.fixture
def write_csv(tmp_path):
    """write_csv(text, name="data.csv") → path"""
    def _write(text, name="data.csv"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)
    return _write
