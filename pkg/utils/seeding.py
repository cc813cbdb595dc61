"""
Seed derivation utilities
모든 난수는 명시적 시드에서 파생됩니다 (전역 난수 사용 금지).
"""
import hashlib

import numpy as np


def derive_seed(master_seed: int, *labels) -> int:
    """
    (master_seed, label...)로부터 64비트 시드를 결정적으로 파생합니다.

    Args:
        master_seed: 상위 시드
        labels: 파생 경로 (예: "forest", "fold", 3)

    Returns:
        0 이상 2**63 미만의 정수 시드
    """
    key = "/".join([str(int(master_seed))] + [str(label) for label in labels])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & ((1 << 63) - 1)


def make_rng(seed: int, *labels) -> np.random.Generator:
    if labels:
        seed = derive_seed(seed, *labels)
    return np.random.default_rng(int(seed) & ((1 << 64) - 1))
