"""
Step 3: Classical Models Module (고전 분류기)
로지스틱 회귀, k-NN, CART 결정 트리/랜덤 포레스트, 선형 SVM을 numpy로 직접 구현합니다.
모든 점수는 "클수록 악성코드에 가깝다"는 규약을 따릅니다.
"""
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import concurrent.futures
from dataclasses import dataclass, asdict
from typing import List, Optional, Tuple, Union

import numpy as np

import config
from modules.data import Dataset
from modules.trained_model import TrainedModel
from utils.console import log
from utils.errors import InvalidConfig, KTooLarge, NonFiniteLoss, ShapeMismatch, EmptyDataset
from utils.seeding import derive_seed, make_rng


# ============== Configs ==============

@dataclass(frozen=True)
class LogRegConfig:
    learning_rate: float = config.LOGREG_DEFAULTS["learning_rate"]
    epochs: int = config.LOGREG_DEFAULTS["epochs"]
    l2: float = config.LOGREG_DEFAULTS["l2"]
    batch: str = "full"

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise InvalidConfig("learning_rate must be > 0")
        if self.l2 < 0:
            raise InvalidConfig("l2 must be >= 0")
        if self.epochs < 0:
            raise InvalidConfig("epochs must be >= 0")
        if self.batch != "full":
            raise InvalidConfig("only full-batch descent is supported")


@dataclass(frozen=True)
class KnnConfig:
    k: int = config.KNN_DEFAULTS["k"]
    metric: str = "euclidean"

    def __post_init__(self):
        if self.k < 1:
            raise InvalidConfig("k must be >= 1")
        if self.metric != "euclidean":
            raise InvalidConfig("only the euclidean metric is supported")


@dataclass(frozen=True)
class TreeConfig:
    max_depth: Optional[int] = config.TREE_DEFAULTS["max_depth"]
    min_samples_split: int = config.TREE_DEFAULTS["min_samples_split"]
    features_per_split: Union[str, int] = config.TREE_DEFAULTS["features_per_split"]
    seed: int = config.MASTER_SEED

    def __post_init__(self):
        _check_tree_params(self.max_depth, self.min_samples_split, self.features_per_split)


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = config.FOREST_DEFAULTS["n_trees"]
    max_depth: Optional[int] = config.FOREST_DEFAULTS["max_depth"]
    min_samples_split: int = config.FOREST_DEFAULTS["min_samples_split"]
    features_per_split: Union[str, int] = config.FOREST_DEFAULTS["features_per_split"]
    bootstrap: bool = config.FOREST_DEFAULTS["bootstrap"]
    seed: int = config.MASTER_SEED

    def __post_init__(self):
        if self.n_trees < 1:
            raise InvalidConfig("n_trees must be >= 1")
        _check_tree_params(self.max_depth, self.min_samples_split, self.features_per_split)


@dataclass(frozen=True)
class LinearSvmConfig:
    lam: float = config.SVM_DEFAULTS["lam"]
    epochs: int = config.SVM_DEFAULTS["epochs"]
    seed: int = config.MASTER_SEED

    def __post_init__(self):
        if not self.lam > 0:
            raise InvalidConfig("lambda must be > 0")
        if self.epochs < 0:
            raise InvalidConfig("epochs must be >= 0")


@dataclass(frozen=True)
class ConstantConfig:
    """다수 클래스를 예측하는 기준선 모델"""
    pass


def _check_tree_params(max_depth, min_samples_split, features_per_split):
    if max_depth is not None and max_depth < 0:
        raise InvalidConfig("max_depth must be >= 0 or None")
    if min_samples_split < 2:
        raise InvalidConfig("min_samples_split must be >= 2")
    if isinstance(features_per_split, str):
        if features_per_split not in ("sqrt", "all"):
            raise InvalidConfig(f"features_per_split must be 'sqrt', 'all' or an int, got '{features_per_split}'")
    elif features_per_split < 1:
        raise InvalidConfig("features_per_split must be >= 1")


def _check_rows(model: TrainedModel, rows: np.ndarray) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != model.n_inputs:
        raise ShapeMismatch(f"expected rows of width {model.n_inputs}, got shape {rows.shape}")
    return rows


def _require_rows(train: Dataset, family: str):
    if train.n_rows == 0:
        raise EmptyDataset(f"{family} needs at least one training row")


def sigmoid(z: np.ndarray) -> np.ndarray:
    # tanh 형태는 큰 |z|에서도 overflow 경고가 없습니다
    return 0.5 * (1.0 + np.tanh(0.5 * z))


# ============== Logistic Regression ==============

def logreg_loss_and_grad(
    w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, l2: float
) -> Tuple[float, np.ndarray, float]:
    """
    L2 정규화 이진 교차 엔트로피와 그 기울기.

    Returns:
        (loss, dL/dw, dL/db)
    """
    z = X @ w + b
    # log(1 + e^z) - y z : 수치적으로 안정한 BCE
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * np.dot(w, w))
    residual = sigmoid(z) - y
    grad_w = X.T @ residual / len(y) + l2 * w
    grad_b = float(np.mean(residual))
    return loss, grad_w, grad_b


def logreg_fit(train: Dataset, cfg: LogRegConfig = LogRegConfig()) -> TrainedModel:
    """
    전체 배치 경사 하강법으로 로지스틱 회귀를 학습합니다.
    손실이 이전 epoch보다 커지면 학습률을 절반으로 줄여 다시 시도합니다.

    Args:
        train: 표준화된 학습 데이터
        cfg: LogRegConfig

    Returns:
        TrainedModel (params: w, b, loss_history)
    """
    _require_rows(train, "logreg")
    X, y = train.rows, train.labels.astype(np.float64)
    w = np.zeros(X.shape[1])
    b = 0.0
    rate = cfg.learning_rate

    loss, gw, gb = logreg_loss_and_grad(w, b, X, y, cfg.l2)
    if not (np.isfinite(loss) and np.all(np.isfinite(gw))):
        raise NonFiniteLoss("logreg loss is not finite; is the input standardized?")

    history = [loss]
    for _ in range(cfg.epochs):
        accepted = False
        for _ in range(60):
            w_new = w - rate * gw
            b_new = b - rate * gb
            new_loss, new_gw, new_gb = logreg_loss_and_grad(w_new, b_new, X, y, cfg.l2)
            if np.isfinite(new_loss) and new_loss <= loss + config.LOSS_SLACK:
                accepted = True
                break
            rate *= 0.5
        if not accepted:
            # 학습률을 더 줄여도 손실이 줄지 않음: 현재 해에서 멈춤
            break
        w, b, loss, gw, gb = w_new, b_new, new_loss, new_gw, new_gb
        history.append(loss)

    return TrainedModel(
        family="logreg",
        config=asdict(cfg),
        params={"w": w, "b": b, "loss_history": history},
        columns=tuple(train.columns),
    )


def logreg_scores(model: TrainedModel, rows: np.ndarray) -> np.ndarray:
    rows = _check_rows(model, rows)
    return sigmoid(rows @ np.asarray(model.params["w"]) + float(model.params["b"]))


# ============== k-Nearest Neighbors ==============

def knn_fit(train: Dataset, cfg: KnnConfig = KnnConfig()) -> TrainedModel:
    _require_rows(train, "knn")
    if cfg.k > train.n_rows:
        raise KTooLarge(f"k={cfg.k} exceeds {train.n_rows} training rows")
    return TrainedModel(
        family="knn",
        config=asdict(cfg),
        params={"X": np.array(train.rows), "y": np.array(train.labels)},
        columns=tuple(train.columns),
    )


def knn_predict(model: TrainedModel, rows: np.ndarray, block_size: int = 256) -> np.ndarray:
    """
    k개 최근접 학습 표본 중 악성(1) 비율을 점수로 반환합니다.
    거리가 같으면 학습 행 번호가 작은 쪽을 우선합니다 (브루트포스 유클리드 거리).
    """
    rows = _check_rows(model, rows)
    X = np.asarray(model.params["X"], dtype=np.float64)
    y = np.asarray(model.params["y"], dtype=np.float64)
    k = int(model.config["k"])
    if k > len(X):
        raise KTooLarge(f"k={k} exceeds {len(X)} training rows")

    x_sq = np.einsum("ij,ij->i", X, X)
    scores = np.empty(len(rows))
    for start in range(0, len(rows), block_size):
        block = rows[start:start + block_size]
        d2 = np.einsum("ij,ij->i", block, block)[:, None] - 2.0 * block @ X.T + x_sq[None, :]
        np.maximum(d2, 0.0, out=d2)
        if k < len(X):
            kth = np.partition(d2, k - 1, axis=1)[:, k - 1]
        else:
            kth = d2.max(axis=1)
        for i in range(len(block)):
            candidates = np.flatnonzero(d2[i] <= kth[i])
            nearest = candidates[np.argsort(d2[i, candidates], kind="stable")[:k]]
            scores[start + i] = y[nearest].mean()
    return scores


# ============== CART / Random Forest ==============

def gini(labels: np.ndarray) -> float:
    """1 - Σ p_i²"""
    if len(labels) == 0:
        return 0.0
    p = float(np.mean(labels))
    return 1.0 - p * p - (1.0 - p) * (1.0 - p)


def _n_split_features(features_per_split, n_features: int) -> int:
    if features_per_split == "all":
        return n_features
    if features_per_split == "sqrt":
        return max(1, int(np.sqrt(n_features)))
    return min(int(features_per_split), n_features)


def _best_threshold(x: np.ndarray, y: np.ndarray) -> Optional[Tuple[float, float]]:
    """
    한 특징에 대해 Gini 감소량이 최대인 임계값(정렬된 고유값의 중간점)을 찾습니다.

    Returns:
        (decrease, threshold) 또는 분할 불가 시 None
    """
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    n = len(xs)
    boundaries = np.flatnonzero(xs[1:] != xs[:-1])
    if boundaries.size == 0:
        return None

    cum_pos = np.cumsum(ys)
    total_pos = cum_pos[-1]
    n_left = boundaries + 1.0
    n_right = n - n_left
    pos_left = cum_pos[boundaries]
    pos_right = total_pos - pos_left

    p_left = pos_left / n_left
    p_right = pos_right / n_right
    gini_left = 2.0 * p_left * (1.0 - p_left)
    gini_right = 2.0 * p_right * (1.0 - p_right)
    weighted = (n_left * gini_left + n_right * gini_right) / n
    p = total_pos / n
    decrease = 2.0 * p * (1.0 - p) - weighted

    best = int(np.argmax(decrease))
    b = boundaries[best]
    threshold = 0.5 * (xs[b] + xs[b + 1])
    # 중간점이 위쪽 값으로 반올림되면 분할이 무너지므로 아래쪽 값을 사용
    if not threshold < xs[b + 1]:
        threshold = xs[b]
    return float(decrease[best]), float(threshold)


def _grow_tree(X: np.ndarray, y: np.ndarray, cfg, rng: np.random.Generator) -> dict:
    """
    깊이 우선으로 CART 트리를 성장시켜 평면 배열 형태로 반환합니다.
    노드 i: feature[i] < 0 이면 리프이고 value[i]는 양성 비율입니다.
    """
    n_features = X.shape[1]
    m = _n_split_features(cfg.features_per_split, n_features)
    feature, threshold, left, right, value, n_node = [], [], [], [], [], []
    importance = np.zeros(n_features)
    n_total = len(y)

    def new_node(idx):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(np.mean(y[idx])))
        n_node.append(len(idx))
        return len(feature) - 1

    root = new_node(np.arange(len(y)))
    stack = [(root, np.arange(len(y)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        y_node = y[idx]
        node_gini = gini(y_node)
        if (node_gini == 0.0
                or (cfg.max_depth is not None and depth >= cfg.max_depth)
                or len(idx) < cfg.min_samples_split):
            continue

        # 무작위 순서로 m개 특징을 평가하되, 유효한 분할이 없으면 나머지 특징도 계속 봅니다
        best = None
        for count, j in enumerate(rng.permutation(n_features)):
            if count >= m and best is not None:
                break
            found = _best_threshold(X[idx, j], y_node)
            if found is None:
                continue
            candidate = (found[0], -int(j), -found[1])
            if best is None or candidate > best:
                best = candidate
        if best is None:
            continue

        decrease, neg_j, neg_t = best
        j, t = -neg_j, -neg_t
        go_left = X[idx, j] <= t
        left_idx, right_idx = idx[go_left], idx[~go_left]
        importance[j] += decrease * len(idx) / n_total

        feature[node] = j
        threshold[node] = t
        left_node = new_node(left_idx)
        right_node = new_node(right_idx)
        left[node] = left_node
        right[node] = right_node
        stack.append((right_node, right_idx, depth + 1))
        stack.append((left_node, left_idx, depth + 1))

    return {
        "feature": np.array(feature, dtype=np.int64),
        "threshold": np.array(threshold, dtype=np.float64),
        "left": np.array(left, dtype=np.int64),
        "right": np.array(right, dtype=np.int64),
        "value": np.array(value, dtype=np.float64),
        "n_node": np.array(n_node, dtype=np.int64),
        "importance": importance,
    }


def tree_predict_scores(tree: dict, rows: np.ndarray) -> np.ndarray:
    """평면 트리 배열로 각 행의 리프 양성 비율을 찾습니다 (벡터화 순회)."""
    feature = np.asarray(tree["feature"])
    threshold = np.asarray(tree["threshold"])
    left = np.asarray(tree["left"])
    right = np.asarray(tree["right"])
    value = np.asarray(tree["value"])

    node = np.zeros(len(rows), dtype=np.int64)
    active = feature[node] >= 0
    while active.any():
        ids = np.flatnonzero(active)
        cur = node[ids]
        go_left = rows[ids, feature[cur]] <= threshold[cur]
        node[ids] = np.where(go_left, left[cur], right[cur])
        active = feature[node] >= 0
    return value[node]


def tree_fit(train: Dataset, cfg: TreeConfig = TreeConfig(), seed: Optional[int] = None) -> TrainedModel:
    _require_rows(train, "tree")
    seed = cfg.seed if seed is None else seed
    rng = make_rng(seed, "tree")
    tree = _grow_tree(train.rows, train.labels.astype(np.float64), cfg, rng)
    return TrainedModel(
        family="tree",
        config={**asdict(cfg), "seed": int(seed)},
        params={"tree": tree},
        columns=tuple(train.columns),
    )


def tree_scores(model: TrainedModel, rows: np.ndarray) -> np.ndarray:
    return tree_predict_scores(model.params["tree"], _check_rows(model, rows))


def _fit_one_tree(X, y, cfg: ForestConfig, index: int) -> dict:
    # 트리마다 (seed, index)에서 파생한 독립 난수 생성기 사용
    rng = make_rng(derive_seed(cfg.seed, "forest", index))
    if cfg.bootstrap:
        sample = rng.integers(0, len(y), size=len(y))
        return _grow_tree(X[sample], y[sample], cfg, rng)
    return _grow_tree(X, y, cfg, rng)


def forest_fit(train: Dataset, cfg: ForestConfig = ForestConfig()) -> TrainedModel:
    """
    부트스트랩 표본 위에 n_trees개의 CART 트리를 학습합니다.
    config.N_JOBS > 1이면 트리를 병렬로 학습하지만 결과는 순차 학습과 동일합니다.
    """
    _require_rows(train, "forest")
    X, y = train.rows, train.labels.astype(np.float64)

    if config.N_JOBS > 1 and cfg.n_trees > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=config.N_JOBS) as executor:
            trees = list(executor.map(lambda i: _fit_one_tree(X, y, cfg, i), range(cfg.n_trees)))
    else:
        trees = [_fit_one_tree(X, y, cfg, i) for i in range(cfg.n_trees)]

    return TrainedModel(
        family="forest",
        config=asdict(cfg),
        params={"trees": trees},
        columns=tuple(train.columns),
    )


def forest_scores(model: TrainedModel, rows: np.ndarray) -> np.ndarray:
    rows = _check_rows(model, rows)
    total = np.zeros(len(rows))
    for tree in model.params["trees"]:
        total += tree_predict_scores(tree, rows)
    return total / len(model.params["trees"])


def tree_importance(trees: List[dict]) -> np.ndarray:
    """트리별 불순도 감소 중요도를 정규화한 뒤 평균합니다."""
    result = np.zeros_like(np.asarray(trees[0]["importance"], dtype=np.float64))
    for tree in trees:
        imp = np.asarray(tree["importance"], dtype=np.float64)
        total = imp.sum()
        if total > 0:
            result += imp / total
    return result / len(trees)


# ============== Linear SVM ==============

def svm_objective(
    w: np.ndarray, b: float, X: np.ndarray, y_pm: np.ndarray, lam: float
) -> Tuple[float, np.ndarray, float]:
    """
    λ/2‖w‖² + 평균 hinge 손실과 그 부분기울기 (y_pm ∈ {-1, +1}). bias는 정규화하지 않습니다.
    margin이 정확히 1인 점에서는 기울기가 정의되지 않으며 0 쪽을 택합니다.
    """
    margins = y_pm * (X @ w + b)
    active = margins < 1.0
    loss = float(0.5 * lam * np.dot(w, w) + np.mean(np.maximum(0.0, 1.0 - margins)))
    n = len(y_pm)
    grad_w = lam * w - (X[active].T @ y_pm[active]) / n
    grad_b = float(-np.sum(y_pm[active]) / n)
    return loss, grad_w, grad_b


def best_bias(scores: np.ndarray, y_pm: np.ndarray) -> float:
    """
    고정된 w에서 평균 hinge 손실을 최소화하는 b.
    손실은 b에 대해 구간별 선형인 볼록 함수이므로 꺾인 점의 오른쪽 기울기가
    처음 0 이상이 되는 곳이 최소점입니다. 기울기가 0인 평평한 구간이면 그 중간점을 씁니다.
    """
    # 양성 항은 b < 1 - s 에서 기울기 -1, 음성 항은 b > -1 - s 에서 기울기 +1
    pos = np.sort(1.0 - scores[y_pm > 0])
    neg = np.sort(-1.0 - scores[y_pm < 0])
    knots = np.unique(np.r_[pos, neg])
    slope = np.searchsorted(neg, knots, side="right") - (len(pos) - np.searchsorted(pos, knots, side="right"))
    i = int(np.argmax(slope >= 0))
    if slope[i] == 0 and i + 1 < len(knots):
        return float(0.5 * (knots[i] + knots[i + 1]))
    return float(knots[i])


def svm_fit(train: Dataset, cfg: LinearSvmConfig = LinearSvmConfig()) -> TrainedModel:
    """
    Pegasos 확률적 부분기울기 하강으로 선형 SVM의 w를 학습하고,
    각 epoch이 끝날 때 b를 정확한 1차원 최소화로 다시 맞춥니다.
    t번째 갱신: w ← (1 - 1/t)·w + [y·(w·x + b) < 1]·y·x/(λt), 학습률 1/(λ·t).
    이 갱신을 풀면 w_{t+1} = acc/t 이고 acc는 위반 표본의 y·x/λ 누적합입니다.
    """
    _require_rows(train, "svm")
    X = train.rows
    n, d = X.shape
    y_pm = np.where(train.labels == 1, 1.0, -1.0)
    rng = make_rng(cfg.seed, "svm")

    acc = np.zeros(d)
    b = 0.0
    t = 0
    history = []
    for epoch in range(cfg.epochs):
        for i in rng.permutation(n):
            t += 1
            # w_t = acc/(t-1), w_1 = 0
            w_x = (X[i] @ acc) / (t - 1) if t > 1 else 0.0
            if y_pm[i] * (w_x + b) < 1.0:
                acc += (y_pm[i] / cfg.lam) * X[i]
        w = acc / t
        b = best_bias(X @ w, y_pm)
        loss, _, _ = svm_objective(w, b, X, y_pm, cfg.lam)
        if not np.isfinite(loss):
            raise NonFiniteLoss(f"svm objective diverged at epoch {epoch}")
        history.append(loss)

    w = acc / t if t else acc
    return TrainedModel(
        family="svm",
        config=asdict(cfg),
        params={"w": w, "b": b, "loss_history": history},
        columns=tuple(train.columns),
    )


def svm_scores(model: TrainedModel, rows: np.ndarray) -> np.ndarray:
    rows = _check_rows(model, rows)
    return rows @ np.asarray(model.params["w"]) + float(model.params["b"])


# ============== Constant baseline ==============

def constant_fit(train: Dataset, cfg: ConstantConfig = ConstantConfig()) -> TrainedModel:
    _require_rows(train, "constant")
    return TrainedModel(
        family="constant",
        config={},
        params={"rate": float(np.mean(train.labels))},
        columns=tuple(train.columns),
    )


def constant_scores(model: TrainedModel, rows: np.ndarray) -> np.ndarray:
    rows = _check_rows(model, rows)
    return np.full(len(rows), float(model.params["rate"]))


if __name__ == "__main__":
    from modules.data import synth_generate, SynthSpec
    demo = synth_generate(SynthSpec(n_rows=200, n_features=4, n_informative=2, class_separation=3.0, seed=1))
    model = logreg_fit(demo)
    log(f"[TRAIN] logreg w={np.round(model.params['w'], 3)} b={model.params['b']:.3f}")
