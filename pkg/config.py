"""
Malware Detection Benchmark Toolkit
Configuration settings
"""
import os
from dotenv import load_dotenv

load_dotenv()  # .env 파일에서 환경변수 로드

# Runtime
VERBOSE = os.environ.get("MALDET_VERBOSE", "1") != "0"
N_JOBS = int(os.environ.get("MALDET_N_JOBS", "1"))  # 1 = 단일 스레드 (결정적)
OUTPUT_DIR = os.environ.get(
    "MALDET_OUTPUT_DIR",
    os.path.join(os.path.dirname(__file__), "outputs")
)
VERSION = "1.0.0"

# Dataset schema (Kaggle PC malware corpus: 34 features + label)
LABEL_COLUMN = os.environ.get("MALDET_LABEL_COLUMN", "classification")
POSITIVE_LABEL = "malware"
NEGATIVE_LABEL = "benign"
HASH_COLUMN = "hash"

KAGGLE_NUMERIC_FEATURES = [
    "millisecond", "state", "usage_counter", "prio", "static_prio",
    "normal_prio", "policy", "vm_pgoff", "vm_truncate_count", "task_size",
    "cached_hole_size", "free_area_cache", "mm_users", "map_count",
    "hiwater_rss", "total_vm", "shared_vm", "exec_vm", "reserved_vm",
    "nr_ptes", "end_data", "last_interval", "nvcsw", "nivcsw", "min_flt",
    "maj_flt", "fs_excl_counter", "lock", "utime", "stime", "gtime",
    "cgtime", "signal_nvcsw",
]

# 참고용 상위 25개 특징 목록 (RFE 결과와 겹침 수만 보고)
REFERENCE_TOP_FEATURES = [
    "millisecond", "state", "usage_counter", "prio", "static_prio",
    "normal_prio", "policy", "vm_pgoff", "vm_truncate_count", "task_size",
    "cached_hole_size", "free_area_cache", "mm_users", "total_vm",
    "shared_vm", "exec_vm", "reserved_vm", "nr_ptes", "end_data",
    "last_interval", "nvcsw", "nivcsw", "min_flt", "maj_flt",
    "fs_excl_counter",
]

# Pipeline
Z_THRESHOLD = 3.0
RFE_K = 25
RFE_STEP = 1
RFE_ESTIMATOR = "logreg"
SPLIT_RATIO = 0.8
STRATIFIED = True
CV_FOLDS = 10
MASTER_SEED = 42

# Numeric guards
PROB_CLAMP = 1e-12
LOSS_SLACK = 1e-9

# Model hyperparameter defaults
LOGREG_DEFAULTS = {"learning_rate": 0.1, "epochs": 200, "l2": 1e-4}
KNN_DEFAULTS = {"k": 5}
FOREST_DEFAULTS = {
    "n_trees": 100,
    "max_depth": None,  # None = 제한 없음
    "min_samples_split": 2,
    "features_per_split": "sqrt",
    "bootstrap": True,
}
TREE_DEFAULTS = {
    "max_depth": None,
    "min_samples_split": 2,
    "features_per_split": "sqrt",
}
SVM_DEFAULTS = {"lam": 1e-4, "epochs": 100}

ADAM_DEFAULTS = {"lr": 1e-3, "beta1": 0.9, "beta2": 0.999, "eps": 1e-8}

# 기존 MLPClassifier 대응 (은닉층 100, 드롭아웃 없음)
MLP_DEFAULTS = {
    "hidden_layers": [100],
    "dropout_rate": 0.0,
    "epochs": 200,
    "batch_size": 200,
    "validation_split": 0.0,
    **ADAM_DEFAULTS,
}

# DNN 하이퍼파라미터 (128/64, dropout 0.5, 10 epochs, batch 32, val 0.2)
DNN_DEFAULTS = {
    "hidden_layers": [128, 64],
    "dropout_rate": 0.5,
    "epochs": 10,
    "batch_size": 32,
    "validation_split": 0.2,
    **ADAM_DEFAULTS,
}

# 기본 비교 대상 모델 순서
DEFAULT_ROSTER = ["mlp", "knn", "logreg", "svm", "forest", "dnn"]
