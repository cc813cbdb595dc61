"""Tests for the confusion matrix, scalar metrics, ROC/AUC, MCC and Kappa."""
import math

import numpy as np
import pytest

from modules.metrics import (
    ConfusionMatrix, RocCurve, confusion, evaluate_scores, kappa, mcc, pairwise_auc, roc_auc, scalar_metrics,
)
from utils.errors import LengthMismatch, NonBinaryValue, NonFiniteScore, SingleClass


def brute_force_auc(labels, scores):
    pos = [s for y, s in zip(labels, scores) if y == 1]
    neg = [s for y, s in zip(labels, scores) if y == 0]
    wins = sum(1.0 if p > q else 0.5 if p == q else 0.0 for p in pos for q in neg)
    return wins / (len(pos) * len(neg))


def random_case(rng, max_rows=30, n_levels=None):
    n = int(rng.integers(2, max_rows + 1))
    labels = rng.integers(0, 2, n)
    labels[0], labels[1] = 0, 1
    rng.shuffle(labels)
    if n_levels is None:
        scores = rng.random(n)
    else:
        scores = rng.integers(0, n_levels, n).astype(float)
    return labels, scores


def random_matrix(rng, high=50):
    tp, fp, fn, tn = (int(v) for v in rng.integers(0, high, 4))
    if tp + fp + fn + tn == 0:
        tp = 1
    return ConfusionMatrix(tp=tp, fp=fp, fn=fn, tn=tn)


def textbook_metrics(labels, preds):
    tp = fp = fn = tn = 0
    for y, p in zip(labels, preds):
        if y == 1 and p == 1:
            tp += 1
        elif y == 0 and p == 1:
            fp += 1
        elif y == 1 and p == 0:
            fn += 1
        else:
            tn += 1
    n = tp + fp + fn + tn
    out = {}
    if tp + fp:
        out["precision"] = tp / (tp + fp)
    if tp + fn:
        out["recall"] = tp / (tp + fn)
    if out.get("precision") and out.get("recall"):
        p, r = out["precision"], out["recall"]
        out["f1"] = 2 * p * r / (p + r)
    den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if den:
        out["mcc"] = (tp * tn - fp * fn) / math.sqrt(den)
    observed = (tp + tn) / n
    chance = ((tp + fp) / n) * ((tp + fn) / n) + ((tn + fn) / n) * ((tn + fp) / n)
    if chance < 1.0:
        out["kappa"] = (observed - chance) / (1.0 - chance)
    return out


class TestFixedCases:

    def test_auc_three_of_four_pairs(self):
        assert roc_auc([0, 0, 1, 1], [0.1, 0.4, 0.35, 0.8]).auc == pytest.approx(0.75)

    def test_mcc_and_kappa_one_third(self):
        cm = ConfusionMatrix(tp=2, fp=1, fn=1, tn=2)
        assert mcc(cm) == pytest.approx(1 / 3)
        assert kappa(cm) == pytest.approx(1 / 3)

    def test_confusion_counts(self):
        cm = confusion([1, 1, 0, 0, 1], [1, 0, 1, 0, 1])
        assert cm.to_dict() == {"tp": 2, "fp": 1, "fn": 1, "tn": 1}
        assert cm.to_frame().loc["actual_malware", "pred_malware"] == 2

    def test_scalar_metrics(self):
        m = scalar_metrics(ConfusionMatrix(tp=6, fp=2, fn=3, tn=9))
        assert m["accuracy"] == pytest.approx(15 / 20)
        assert m["precision"] == pytest.approx(6 / 8)
        assert m["recall"] == pytest.approx(6 / 9)
        assert m["f1"] == pytest.approx(2 * 6 / (2 * 6 + 2 + 3))
        assert m["degenerate"] == []

    def test_perfect_ranking(self):
        assert roc_auc([0, 0, 1, 1], [0.1, 0.2, 0.3, 0.4]).auc == 1.0

    def test_reversed_ranking(self):
        assert roc_auc([1, 1, 0, 0], [0.1, 0.2, 0.3, 0.4]).auc == 0.0

    def test_constant_scores_give_diagonal(self):
        roc = roc_auc([0, 1, 0, 1], [0.7] * 4)
        assert roc.auc == 0.5
        assert [p[:2] for p in roc.points] == [(0.0, 0.0), (1.0, 1.0)]
        assert roc.points[1][2] == 0.7


class TestAuc:

    def test_fuzz_against_pair_counting(self):
        rng = np.random.default_rng(0)
        for case in range(1000):
            labels, scores = random_case(rng, n_levels=5 if case % 2 else None)
            expected = brute_force_auc(labels, scores)
            assert roc_auc(labels, scores).auc == pytest.approx(expected, abs=1e-12)
            assert pairwise_auc(labels, scores) == pytest.approx(expected, abs=1e-12)

    def test_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            labels, scores = random_case(rng, n_levels=8)
            base = roc_auc(labels, scores).auc
            assert roc_auc(labels, 2.0 * scores + 1.0).auc == base
            assert roc_auc(labels, np.exp(scores)).auc == base

    def test_curve_is_monotone_from_origin_to_corner(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            labels, scores = random_case(rng, n_levels=6)
            points = np.array(roc_auc(labels, scores).points)
            assert tuple(points[0, :2]) == (0.0, 0.0)
            assert tuple(points[-1, :2]) == (1.0, 1.0)
            assert points[0, 2] == scores.max() + 1.0
            assert np.all(np.diff(points[:, 0]) >= 0)
            assert np.all(np.diff(points[:, 1]) >= 0)
            assert np.all(np.diff(points[1:, 2]) < 0)

    def test_curve_dict_round_trip(self):
        roc = roc_auc([0, 1, 1], [0.2, 0.5, 0.9])
        assert RocCurve.from_dict(roc.to_dict()) == roc

    def test_matches_sklearn(self):
        sk = pytest.importorskip("sklearn.metrics")
        rng = np.random.default_rng(3)
        for _ in range(100):
            labels, scores = random_case(rng, max_rows=200, n_levels=10)
            assert roc_auc(labels, scores).auc == pytest.approx(sk.roc_auc_score(labels, scores), abs=1e-12)


class TestAgreementMetrics:

    def test_invariants_over_random_matrices(self):
        rng = np.random.default_rng(4)
        for _ in range(10000):
            cm = random_matrix(rng)
            acc = scalar_metrics(cm)["accuracy"]
            m, k = mcc(cm), kappa(cm)
            assert -1.0 <= m <= 1.0
            assert -1.0 - 1e-12 <= k <= 1.0 + 1e-12
            assert k <= acc + 1e-12
            assert mcc(cm.swapped()) == pytest.approx(m, abs=1e-12)
            assert kappa(cm.swapped()) == pytest.approx(k, abs=1e-12)

    def test_fuzz_against_textbook_formulas(self):
        rng = np.random.default_rng(6)
        for _ in range(1000):
            n = int(rng.integers(1, 80))
            labels = rng.integers(0, 2, n)
            preds = np.where(rng.random(n) < rng.random(), labels, rng.integers(0, 2, n))
            cm = confusion(labels, preds)
            ours = scalar_metrics(cm)
            ours["mcc"], ours["kappa"] = mcc(cm), kappa(cm)
            for name, expected in textbook_metrics(labels.tolist(), preds.tolist()).items():
                assert ours[name] == pytest.approx(expected, abs=1e-12), name

    def test_perfect_agreement(self):
        cm = ConfusionMatrix(tp=5, fp=0, fn=0, tn=7)
        assert mcc(cm) == 1.0
        assert kappa(cm) == 1.0

    def test_large_counts_do_not_overflow(self):
        cm = ConfusionMatrix(tp=3_000_000_000, fp=1, fn=1, tn=3_000_000_000)
        assert mcc(cm) == pytest.approx(1.0)

    def test_matches_sklearn(self):
        sk = pytest.importorskip("sklearn.metrics")
        rng = np.random.default_rng(5)
        for _ in range(200):
            n = int(rng.integers(4, 60))
            labels = rng.integers(0, 2, n)
            preds = rng.integers(0, 2, n)
            cm = confusion(labels, preds)
            flags = []
            m = mcc(cm, flags)
            if "mcc" not in flags:
                assert m == pytest.approx(sk.matthews_corrcoef(labels, preds), abs=1e-12)
            k = kappa(cm, flags)
            if "kappa" not in flags:
                assert k == pytest.approx(sk.cohen_kappa_score(labels, preds), abs=1e-12)


class TestDegenerate:

    def test_all_positive_predictions(self):
        report = evaluate_scores("m", [0, 1], [0.9, 0.9], threshold=0.5)
        assert report["precision"] == 0.5
        assert report["recall"] == 1.0
        assert report["mcc"] == 0.0
        assert "mcc" in report["degenerate"]

    def test_single_class_labels(self):
        report = evaluate_scores("m", [1, 1, 1], [0.2, 0.6, 0.9], threshold=0.5)
        assert report["auc"] is None
        assert report["roc"] is None
        assert "auc" in report["degenerate"]
        assert report["kappa"] == 0.0
        assert "mcc" in report["degenerate"]

    def test_zero_denominators_are_flagged(self):
        m = scalar_metrics(ConfusionMatrix(tp=0, fp=0, fn=0, tn=4))
        assert m["precision"] == 0.0
        assert m["recall"] == 0.0
        assert m["f1"] == 0.0
        assert set(m["degenerate"]) == {"precision", "recall", "f1"}


class TestEvaluateScores:

    def test_threshold_tie_is_positive(self):
        report = evaluate_scores("m", [0, 1], [0.2, 0.5], threshold=0.5)
        assert report["cm"] == {"tp": 1, "fp": 0, "fn": 0, "tn": 1}

    def test_margin_threshold(self):
        report = evaluate_scores("svm", [0, 1, 1], [-0.3, 0.0, 2.0], threshold=0.0)
        assert report["accuracy"] == 1.0

    def test_report_fields(self):
        report = evaluate_scores("m", [0, 1, 0, 1], [0.1, 0.8, 0.6, 0.4], 0.5, train_time_seconds=1.5)
        assert report["model_id"] == "m"
        assert report["n_rows"] == 4
        assert report["train_time_seconds"] == 1.5
        assert report["auc"] == pytest.approx(0.75)
        assert "roc" in report

    def test_roc_can_be_omitted(self):
        report = evaluate_scores("m", [0, 1], [0.1, 0.9], 0.5, include_roc=False)
        assert "roc" not in report


class TestErrors:

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            confusion([0, 1], [0])
        with pytest.raises(LengthMismatch):
            roc_auc([0, 1], [0.5])

    def test_empty_confusion(self):
        with pytest.raises(LengthMismatch):
            confusion([], [])

    def test_non_binary(self):
        with pytest.raises(NonBinaryValue):
            confusion([0, 2], [0, 1])

    def test_single_class(self):
        with pytest.raises(SingleClass):
            roc_auc([1, 1], [0.1, 0.2])
        with pytest.raises(SingleClass):
            pairwise_auc([0, 0], [0.1, 0.2])

    def test_non_finite_score(self):
        with pytest.raises(NonFiniteScore):
            roc_auc([0, 1], [0.1, float("nan")])
