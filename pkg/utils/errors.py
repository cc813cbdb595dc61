"""
Error hierarchy for the malware detection toolkit
입력 오류(exit 2)와 수치 오류(exit 3)를 구분합니다.
"""
from typing import Optional


class MalDetError(Exception):
    """모든 도메인 오류의 기반 클래스"""
    exit_code = 1


class InputError(MalDetError, ValueError):
    exit_code = 2


class NumericError(MalDetError, ArithmeticError):
    exit_code = 3


# ---- data ----
class SchemaMismatch(InputError):
    pass


class ParseError(InputError):
    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        self.row = row
        self.column = column
        if row is not None or column is not None:
            message = f"{message} (row={row}, column={column})"
        super().__init__(message)


class EmptyDataset(InputError):
    pass


class InvalidSpec(InputError):
    pass


# ---- preprocess ----
class EmptyResult(InputError):
    pass


class InvalidRatio(InputError):
    pass


class InsufficientClassRows(InputError):
    pass


# ---- selection ----
class InvalidK(InputError):
    pass


class EstimatorLacksImportance(InputError):
    pass


class UnknownColumn(InputError):
    pass


# ---- models ----
class InvalidConfig(InputError):
    pass


class KTooLarge(InputError):
    pass


class ShapeMismatch(InputError):
    pass


class NonFiniteLoss(NumericError):
    pass


# ---- metrics ----
class LengthMismatch(InputError):
    pass


class NonBinaryValue(InputError):
    pass


class SingleClass(InputError):
    pass


class NonFiniteScore(InputError):
    pass


# ---- bench ----
class FoldTooSmall(InputError):
    pass


class InvalidPlan(InputError):
    pass


class IoError(InputError):
    pass


class PipelineStageError(MalDetError):
    """run_benchmark 내부 오류를 파이프라인 단계명과 함께 감쌉니다."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 1)
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
