"""
공통 유틸: 로그 출력, 숫자 포맷, JSON 직렬화
"""

import json
import logging
import math
import sys
from typing import Any

from config.settings import SIG_DIGITS

LOGGER_NAME = "noma_aoi"

logger = logging.getLogger(LOGGER_NAME)


def setup_logging(verbose: bool = False, quiet: bool = False) -> logging.Logger:
    """
    CLI 시작 시 한 번 호출. 로그는 항상 stderr로 보낸다 (stdout은 JSON 전용).
    @param verbose: DEBUG 레벨 (잔차, 배치 평균 등)
    @param quiet: WARNING 이상만 출력
    """
    level = logging.INFO
    if verbose:
        level = logging.DEBUG
    if quiet:
        level = logging.WARNING

    # 재호출 시 핸들러 중복 방지
    for handler in list(logger.handlers):
        logger.removeHandler(handler)

    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(message)s"))
    logger.addHandler(handler)
    logger.setLevel(level)
    logger.propagate = False
    return logger


# run.sh 의 log_success / log_warning / log_error 와 같은 태그

def log_success(message: str) -> None:
    logger.info(f"[OK] {message}")


def log_warning(message: str) -> None:
    logger.warning(f"[WARN] {message}")


def log_error(message: str) -> None:
    logger.error(f"[ERROR] {message}")


# ===== 숫자 포맷 =====

def round_sig(value: float, digits: int = SIG_DIGITS) -> float:
    """유효숫자 digits 자리로 반올림 (로케일 무관)"""
    if value is None or not math.isfinite(value):
        return value
    return float(f"{value:.{digits}g}")


def round_floats(obj: Any, digits: int = SIG_DIGITS) -> Any:
    """dict / list 안의 모든 float 를 재귀적으로 반올림"""
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, float):
        return round_sig(obj, digits)
    if isinstance(obj, dict):
        return {k: round_floats(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v, digits) for v in obj]
    return obj


def dump_json(obj: Any) -> str:
    """
    결정적 JSON 문자열. pydantic 모델은 model_dump(mode="json") 후 직렬화.
    필드 순서는 선언 순서 그대로 둔다 (sort_keys 사용 안 함).
    """
    if hasattr(obj, "model_dump"):
        obj = obj.model_dump(mode="json")
    return json.dumps(round_floats(obj), indent=2, ensure_ascii=False) + "\n"


def relative_gap(a: float, b: float) -> float:
    """|a - b| / max(|a|, |b|), 둘 다 0이면 0"""
    scale = max(abs(a), abs(b))
    if scale == 0.0:
        return 0.0
    return abs(a - b) / scale
