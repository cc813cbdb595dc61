"""
Step 4: Neural Network Module (신경망)
완전연결 신경망(MLP / DNN)을 numpy로 직접 구현합니다.
ReLU 은닉층, sigmoid 출력, inverted dropout, 이진 교차 엔트로피, Adam 최적화기.
"""
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from dataclasses import dataclass, asdict, field
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

import config
from modules.data import Dataset
from modules.trained_model import TrainedModel
from utils.console import log
from utils.errors import InvalidConfig, NonFiniteLoss, ShapeMismatch, EmptyDataset
from utils.seeding import derive_seed, make_rng

TRACE_COLUMNS = ["epoch", "train_loss", "train_acc", "val_loss", "val_acc"]


@dataclass(frozen=True)
class NetConfig:
    hidden_layers: Tuple[int, ...] = tuple(config.DNN_DEFAULTS["hidden_layers"])
    dropout_rate: float = config.DNN_DEFAULTS["dropout_rate"]
    lr: float = config.ADAM_DEFAULTS["lr"]
    beta1: float = config.ADAM_DEFAULTS["beta1"]
    beta2: float = config.ADAM_DEFAULTS["beta2"]
    eps: float = config.ADAM_DEFAULTS["eps"]
    epochs: int = config.DNN_DEFAULTS["epochs"]
    batch_size: int = config.DNN_DEFAULTS["batch_size"]
    validation_split: float = config.DNN_DEFAULTS["validation_split"]
    seed: int = config.MASTER_SEED
    activation_hidden: str = "relu"
    activation_output: str = "sigmoid"
    optimizer: str = "adam"
    loss: str = "binary_cross_entropy"

    def __post_init__(self):
        object.__setattr__(self, "hidden_layers", tuple(int(h) for h in self.hidden_layers))
        if any(h < 1 for h in self.hidden_layers):
            raise InvalidConfig("hidden unit counts must be >= 1")
        if self.batch_size < 1:
            raise InvalidConfig("batch_size must be >= 1")
        if self.epochs < 0:
            raise InvalidConfig("epochs must be >= 0")
        if not 0 <= self.dropout_rate < 1:
            raise InvalidConfig("dropout_rate must lie in [0, 1)")
        if not 0 <= self.validation_split < 1:
            raise InvalidConfig("validation_split must lie in [0, 1)")
        if not self.lr > 0:
            raise InvalidConfig("lr must be > 0")
        if (self.activation_hidden, self.activation_output, self.optimizer, self.loss) != (
                "relu", "sigmoid", "adam", "binary_cross_entropy"):
            raise InvalidConfig("only relu/sigmoid/adam/binary_cross_entropy networks are supported")


@dataclass
class NetParams:
    """층별 가중치와 Adam 상태 (1차/2차 모멘트, 스텝 카운터 t)"""
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    m_w: List[np.ndarray] = field(default_factory=list)
    m_b: List[np.ndarray] = field(default_factory=list)
    v_w: List[np.ndarray] = field(default_factory=list)
    v_b: List[np.ndarray] = field(default_factory=list)
    t: int = 0

    def __post_init__(self):
        if not self.m_w:
            self.m_w = [np.zeros_like(W) for W in self.weights]
            self.m_b = [np.zeros_like(b) for b in self.biases]
            self.v_w = [np.zeros_like(W) for W in self.weights]
            self.v_b = [np.zeros_like(b) for b in self.biases]

    @property
    def input_dim(self) -> int:
        return int(self.weights[0].shape[0])


def net_init(input_dim: int, hidden_layers, seed: int) -> NetParams:
    """He-uniform 초기화: W ~ U(-√(6/fan_in), +√(6/fan_in)), b = 0"""
    rng = make_rng(seed, "init")
    sizes = [int(input_dim)] + [int(h) for h in hidden_layers] + [1]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return NetParams(weights=weights, biases=biases)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _dropout_masks(params: NetParams, n_rows: int, rate: float, mask_seed: Optional[int]) -> List[Optional[np.ndarray]]:
    """은닉층마다 inverted dropout 마스크 (유지 유닛은 1/(1-p)로 스케일)"""
    n_hidden = len(params.weights) - 1
    if rate <= 0.0 or mask_seed is None:
        return [None] * n_hidden
    rng = make_rng(mask_seed, "dropout")
    keep = 1.0 - rate
    return [
        (rng.random((n_rows, params.weights[l].shape[1])) < keep) / keep
        for l in range(n_hidden)
    ]


def _forward(params: NetParams, rows: np.ndarray, masks) -> Tuple[List[np.ndarray], np.ndarray]:
    """활성값 목록(입력 포함)과 출력 확률을 반환합니다."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != params.input_dim:
        raise ShapeMismatch(f"expected rows of width {params.input_dim}, got shape {rows.shape}")
    activations = [rows]
    a = rows
    for l in range(len(params.weights) - 1):
        a = np.maximum(0.0, a @ params.weights[l] + params.biases[l])
        if masks[l] is not None:
            a = a * masks[l]
        activations.append(a)
    z_out = a @ params.weights[-1] + params.biases[-1]
    probs = np.clip(_sigmoid(z_out[:, 0]), config.PROB_CLAMP, 1.0 - config.PROB_CLAMP)
    return activations, probs


def net_forward(
    params: NetParams,
    rows: np.ndarray,
    mode: str = "infer",
    dropout_rate: float = 0.0,
    mask_seed: Optional[int] = None,
) -> np.ndarray:
    """
    순전파. mode="train"이면 mask_seed로 dropout 마스크를 만들고, "infer"는 dropout 없이 계산합니다.

    Returns:
        악성 확률 (0, 1)
    """
    if mode not in ("train", "infer"):
        raise InvalidConfig(f"unknown forward mode '{mode}'")
    rate = dropout_rate if mode == "train" else 0.0
    masks = _dropout_masks(params, len(rows), rate, mask_seed)
    _, probs = _forward(params, rows, masks)
    return probs


def bce_loss(probs: np.ndarray, labels: np.ndarray) -> float:
    p = np.clip(probs, config.PROB_CLAMP, 1.0 - config.PROB_CLAMP)
    y = np.asarray(labels, dtype=np.float64)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def net_backward(
    params: NetParams,
    rows: np.ndarray,
    labels: np.ndarray,
    dropout_rate: float = 0.0,
    mask_seed: Optional[int] = None,
) -> Tuple[float, List[np.ndarray], List[np.ndarray]]:
    """
    배치 평균 BCE의 모든 W_l, b_l에 대한 기울기를 역전파로 계산합니다.
    같은 mask_seed의 순전파와 동일한 dropout 마스크를 사용합니다.

    Returns:
        (loss, grad_weights, grad_biases)
    """
    masks = _dropout_masks(params, len(rows), dropout_rate, mask_seed)
    activations, probs = _forward(params, rows, masks)
    y = np.asarray(labels, dtype=np.float64).reshape(-1)
    if len(y) != len(probs):
        raise ShapeMismatch(f"{len(probs)} rows but {len(y)} labels")
    n = len(y)

    grad_w = [None] * len(params.weights)
    grad_b = [None] * len(params.biases)
    # sigmoid + BCE: dL/dz = (p - y) / n
    delta = ((probs - y) / n)[:, None]
    for l in range(len(params.weights) - 1, -1, -1):
        grad_w[l] = activations[l].T @ delta
        grad_b[l] = delta.sum(axis=0)
        if l > 0:
            delta = delta @ params.weights[l].T
            if masks[l - 1] is not None:
                delta = delta * masks[l - 1]
            delta = delta * (activations[l] > 0)
    return bce_loss(probs, y), grad_w, grad_b


def adam_step(
    params: NetParams,
    grad_w: List[np.ndarray],
    grad_b: List[np.ndarray],
    lr: float = config.ADAM_DEFAULTS["lr"],
    beta1: float = config.ADAM_DEFAULTS["beta1"],
    beta2: float = config.ADAM_DEFAULTS["beta2"],
    eps: float = config.ADAM_DEFAULTS["eps"],
) -> NetParams:
    """
    Adam 갱신 한 스텝. 입력 params는 수정하지 않고 새 NetParams를 반환합니다.
    m ← β1·m + (1-β1)·g,  v ← β2·v + (1-β2)·g²,  θ ← θ - lr·m̂/(√v̂ + ε)
    """
    t = params.t + 1
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t

    def update(theta, m, v, g):
        if g.shape != theta.shape:
            raise ShapeMismatch(f"gradient shape {g.shape} does not match parameter {theta.shape}")
        m_new = beta1 * m + (1.0 - beta1) * g
        v_new = beta2 * v + (1.0 - beta2) * g * g
        theta_new = theta - lr * (m_new / c1) / (np.sqrt(v_new / c2) + eps)
        return theta_new, m_new, v_new

    new_w, new_mw, new_vw = zip(*[update(*args) for args in zip(params.weights, params.m_w, params.v_w, grad_w)])
    new_b, new_mb, new_vb = zip(*[update(*args) for args in zip(params.biases, params.m_b, params.v_b, grad_b)])
    return NetParams(list(new_w), list(new_b), list(new_mw), list(new_mb), list(new_vw), list(new_vb), t)


def _evaluate(params: NetParams, rows: np.ndarray, labels: np.ndarray) -> Tuple[float, float]:
    if len(labels) == 0:
        return float("nan"), float("nan")
    probs = net_forward(params, rows, mode="infer")
    accuracy = float(np.mean((probs >= 0.5) == (labels == 1)))
    return bce_loss(probs, labels), accuracy


def net_fit(train: Dataset, cfg: NetConfig = NetConfig(), family: str = "dnn") -> Tuple[TrainedModel, pd.DataFrame]:
    """
    미니배치 Adam으로 신경망을 학습합니다.
    검증 세트는 학습 전에 한 번만 (시드 기반으로) 떼어 두고 매 epoch 끝에 평가합니다.

    Args:
        train: 표준화된 학습 데이터
        cfg: NetConfig
        family: "mlp" 또는 "dnn"

    Returns:
        (TrainedModel, TrainTrace DataFrame)
    """
    if train.n_rows == 0:
        raise EmptyDataset(f"{family} needs at least one training row")

    X, y = train.rows, train.labels.astype(np.float64)
    n = len(y)
    n_val = int(np.floor(cfg.validation_split * n))
    order = make_rng(cfg.seed, "validation").permutation(n)
    val_idx, fit_idx = np.sort(order[:n_val]), np.sort(order[n_val:])
    X_fit, y_fit = X[fit_idx], y[fit_idx]
    X_val, y_val = X[val_idx], y[val_idx]

    params = net_init(X.shape[1], cfg.hidden_layers, cfg.seed)
    records = []

    for epoch in range(cfg.epochs):
        perm = make_rng(cfg.seed, "epoch", epoch).permutation(len(y_fit))
        for b, start in enumerate(range(0, len(perm), cfg.batch_size)):
            batch = perm[start:start + cfg.batch_size]
            mask_seed = derive_seed(cfg.seed, "mask", epoch, b) if cfg.dropout_rate > 0 else None
            loss, grad_w, grad_b = net_backward(params, X_fit[batch], y_fit[batch], cfg.dropout_rate, mask_seed)
            if not np.isfinite(loss):
                raise NonFiniteLoss(f"{family} loss diverged at epoch {epoch}, batch {b}")
            params = adam_step(params, grad_w, grad_b, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)

        train_loss, train_acc = _evaluate(params, X_fit, y_fit)
        val_loss, val_acc = _evaluate(params, X_val, y_val)
        if not np.isfinite(train_loss):
            raise NonFiniteLoss(f"{family} training loss is not finite after epoch {epoch}")
        records.append({
            "epoch": epoch + 1,
            "train_loss": train_loss,
            "train_acc": train_acc,
            "val_loss": val_loss,
            "val_acc": val_acc,
        })
        log(f"[TRAIN] {family} epoch {epoch + 1}/{cfg.epochs}: "
            f"loss={train_loss:.4f} acc={train_acc:.4f} val_loss={val_loss:.4f} val_acc={val_acc:.4f}")

    trace = pd.DataFrame(records, columns=TRACE_COLUMNS)
    model = TrainedModel(
        family=family,
        config={**asdict(cfg), "hidden_layers": list(cfg.hidden_layers)},
        params={"layers": [{"W": W, "b": b} for W, b in zip(params.weights, params.biases)]},
        columns=tuple(train.columns),
        trace=trace,
    )
    return model, trace


def params_from_model(model: TrainedModel) -> NetParams:
    layers = model.params["layers"]
    return NetParams(
        weights=[np.asarray(layer["W"], dtype=np.float64) for layer in layers],
        biases=[np.asarray(layer["b"], dtype=np.float64) for layer in layers],
    )


def net_scores(model: TrainedModel, rows: np.ndarray) -> np.ndarray:
    return net_forward(params_from_model(model), rows, mode="infer")


def mlp_config(**overrides) -> NetConfig:
    """은닉층 100, dropout 없음, 200 epoch 기본값의 MLP 설정"""
    base = {k: v for k, v in config.MLP_DEFAULTS.items()}
    base.update(overrides)
    return NetConfig(**base)


def dnn_config(**overrides) -> NetConfig:
    """은닉 128/64, dropout 0.5, 10 epoch, batch 32, 검증 0.2"""
    base = {k: v for k, v in config.DNN_DEFAULTS.items()}
    base.update(overrides)
    return NetConfig(**base)
