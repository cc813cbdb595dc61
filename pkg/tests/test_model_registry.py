"""Tests for config merging, fit/predict dispatch and model JSON files."""
import json

import numpy as np
import pytest

from modules import model_registry as reg
from modules.data import SynthSpec, synth_generate
from modules.models_classic import ForestConfig, LinearSvmConfig
from modules.preprocess import apply_scaler, fit_scaler
from utils.errors import EstimatorLacksImportance, InvalidConfig, IoError

SMALL_CONFIGS = {
    "logreg": {"epochs": 30},
    "knn": {"k": 3},
    "tree": {"max_depth": 4},
    "forest": {"n_trees": 4, "max_depth": 4},
    "svm": {"epochs": 5},
    "constant": {},
    "mlp": {"hidden_layers": [6], "epochs": 2},
    "dnn": {"hidden_layers": [8, 4], "epochs": 2},
}


@pytest.fixture(scope="module")
def scaled():
    data = synth_generate(SynthSpec(n_rows=240, n_features=4, n_informative=2, class_separation=3.0, seed=8))
    return apply_scaler(data, fit_scaler(data))


class TestMakeConfig:

    def test_defaults(self):
        cfg = reg.make_config("svm")
        assert isinstance(cfg, LinearSvmConfig)
        assert cfg.lam == 1e-4

    def test_overrides_merge_onto_defaults(self):
        cfg = reg.make_config("forest", {"n_trees": 7})
        assert isinstance(cfg, ForestConfig)
        assert cfg.n_trees == 7
        assert cfg.bootstrap is True

    def test_lambda_alias(self):
        assert reg.make_config("svm", {"lambda": 0.5}).lam == 0.5

    def test_seed_injected_only_where_supported(self):
        assert reg.make_config("forest", seed=99).seed == 99
        assert reg.make_config("dnn", seed=3).seed == 3
        reg.make_config("knn", seed=5)

    def test_net_families_differ(self):
        assert reg.make_config("mlp").hidden_layers == (100,)
        assert reg.make_config("dnn").hidden_layers == (128, 64)

    def test_unknown_key(self):
        with pytest.raises(InvalidConfig):
            reg.make_config("knn", {"neighbours": 3})

    def test_unknown_family(self):
        with pytest.raises(InvalidConfig):
            reg.make_config("xgboost")

    def test_invalid_value(self):
        with pytest.raises(InvalidConfig):
            reg.make_config("knn", {"k": 0})


class TestDispatch:

    @pytest.mark.parametrize("family", sorted(SMALL_CONFIGS))
    def test_fit_and_predict(self, scaled, family):
        model = reg.fit_model(family, scaled, reg.make_config(family, SMALL_CONFIGS[family], seed=1))
        scores = reg.predict_scores(model, scaled.rows)
        labels = reg.predict_labels(model, scaled.rows)
        assert scores.shape == (scaled.n_rows,)
        assert np.all(np.isfinite(scores))
        assert set(np.unique(labels)) <= {0, 1}
        assert model.columns == tuple(scaled.columns)

    def test_nets_carry_trace(self, scaled):
        model = reg.fit_model("mlp", scaled, reg.make_config("mlp", SMALL_CONFIGS["mlp"]))
        assert len(model.trace) == 2

    def test_score_at_threshold_is_malware(self, scaled):
        model = reg.fit_model("svm", scaled, reg.make_config("svm", {"epochs": 1}))
        np.testing.assert_array_equal(reg.labels_from_scores(model, np.array([-0.1, 0.0, 0.1])), [0, 1, 1])


class TestImportance:

    @pytest.mark.parametrize("family", reg.IMPORTANCE_FAMILIES)
    def test_one_value_per_column(self, scaled, family):
        model = reg.fit_model(family, scaled, reg.make_config(family, SMALL_CONFIGS[family]))
        importance = reg.feature_importance(model)
        assert importance.shape == (scaled.n_features,)
        assert np.all(importance >= 0)

    @pytest.mark.parametrize("family", ["knn", "constant", "mlp", "dnn"])
    def test_missing_importance(self, scaled, family):
        model = reg.fit_model(family, scaled, reg.make_config(family, SMALL_CONFIGS[family]))
        with pytest.raises(EstimatorLacksImportance):
            reg.feature_importance(model)


class TestModelFiles:

    @pytest.mark.parametrize("family", sorted(SMALL_CONFIGS))
    def test_saved_model_predicts_identically(self, scaled, family, tmp_path):
        model = reg.fit_model(family, scaled, reg.make_config(family, SMALL_CONFIGS[family], seed=2))
        path = reg.save_model(model, str(tmp_path / f"{family}.json"))
        loaded, scaler = reg.load_model(path)
        assert scaler is None
        assert loaded.family == family
        assert loaded.columns == model.columns
        np.testing.assert_array_equal(reg.predict_scores(loaded, scaled.rows), reg.predict_scores(model, scaled.rows))

    def test_tree_is_stored_as_nested_nodes(self, scaled):
        model = reg.fit_model("tree", scaled, reg.make_config("tree", {"max_depth": 2}))
        root = reg.model_to_dict(model)["parameters"]["root"]
        assert set(root) == {"feature", "threshold", "left", "right"}
        assert "leaf_score" in root["left"] or "feature" in root["left"]

    def test_scaler_travels_with_model(self, tmp_path):
        raw = synth_generate(SynthSpec(n_rows=60, n_features=3, seed=4))
        stats = fit_scaler(raw)
        model = reg.fit_model("logreg", apply_scaler(raw, stats), reg.make_config("logreg", {"epochs": 5}))
        path = reg.save_model(model, str(tmp_path / "m.json"), scaler=stats)
        _, loaded = reg.load_model(path)
        assert loaded.columns == stats.columns
        np.testing.assert_array_equal(loaded.mean, stats.mean)
        np.testing.assert_array_equal(loaded.std, stats.std)

    def test_file_is_plain_json(self, scaled, tmp_path):
        model = reg.fit_model("constant", scaled)
        path = reg.save_model(model, str(tmp_path / "c.json"))
        with open(path, encoding="utf-8") as f:
            record = json.load(f)
        assert record["family"] == "constant"
        assert record["parameters"]["rate"] == pytest.approx(float(scaled.labels.mean()))

    def test_missing_file(self, tmp_path):
        with pytest.raises(IoError):
            reg.load_model(str(tmp_path / "absent.json"))

    def test_malformed_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"family": "logreg", "columns": ["a"]}), encoding="utf-8")
        with pytest.raises(InvalidConfig):
            reg.load_model(str(path))

    def test_unknown_family_in_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"family": "gbm"}), encoding="utf-8")
        with pytest.raises(InvalidConfig):
            reg.load_model(str(path))
