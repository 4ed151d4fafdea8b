"""
NOMA / OMA 평균 AoI 의 명시적 행렬 풀이 (엔진 경로의 교차 검증용)

각 사용자 관점에서
  A1 π = c1   : 정상분포 (마지막 행은 정규화 Σπ = 1)
  A2 v' = c2  : 모니터 AoI 와 패킷 AoI 상관벡터 중 0 이 아닌 성분만 모은 축약 시스템
을 풀고 Δ̄_k = Σ_q v_q0 를 구한다.

NOMA A2 의 두 항목은 인쇄된 형태와 다르게 구현한다 (theorem2_typo_ledger 참고):
  (1,1) 유휴 상태 유출률: λ1 + λ2
  (5,5) v21 방정식: 상태 2 자기전이(λ1)가 x1 을 0 으로 만들므로 λ1 + μ'1 + μ'2
"""

from typing import List, NamedTuple, Tuple

import numpy as np

from modules.shs_engine import DEFAULT_OPTIONS, EngineOptions, solve_dense
from modules.system_params import AgeReport, SystemParams

# 축약 미지수 중 모니터 AoI 성분(v_q0)의 위치
NOMA_AGE_INDICES = (0, 1, 3, 5)      # [v00, v10, v11, v20, v21, v30]
OMA_AGE_INDICES = (0, 1, 3, 4, 6)    # [v00, v10, v11, v20, v30, v31, v40, v41]

# 축약 미지수 ↔ 전체 (상태, 성분) 대응
NOMA_REDUCED_UNKNOWNS = ((0, 0), (1, 0), (1, 1), (2, 0), (2, 1), (3, 0))
OMA_REDUCED_UNKNOWNS = ((0, 0), (1, 0), (1, 1), (2, 0), (3, 0), (3, 1), (4, 0), (4, 1))


class TheoremSystem(NamedTuple):
    a1: np.ndarray
    c1: np.ndarray
    a2: np.ndarray
    c2: np.ndarray


class LedgerEntry(NamedTuple):
    row: int          # 1-based
    col: int          # 1-based
    printed: float
    corrected: float


# ===== NOMA =====

def _noma_stationary_system(p: SystemParams) -> Tuple[np.ndarray, np.ndarray]:
    l1, l2, m1, m2, m1p, m2p = p.rates()
    a1 = np.array([
        [l1 + l2, -m1, 0.0, -m2],
        [-l2, 0.0, -m1p, l1 + m2],
        [0.0, -l2, m1p + m2p, -l1],
        [1.0, 1.0, 1.0, 1.0],
    ])
    c1 = np.array([0.0, 0.0, 0.0, 1.0])
    return a1, c1


def _noma_correlation_matrix(p: SystemParams, verbatim: bool = False) -> np.ndarray:
    l1, l2, m1, m2, m1p, m2p = p.rates()
    idle_outflow = (l1 + l1) if verbatim else (l1 + l2)
    v21_outflow = (m1p + m2p) if verbatim else (l1 + m1p + m2p)
    return np.array([
        [idle_outflow, 0.0, -m1, 0.0, 0.0, -m2],
        [-l1, l2 + m1, 0.0, -m2p, 0.0, 0.0],
        [0.0, 0.0, l1 + l2 + m1, 0.0, -m2p, 0.0],
        [0.0, -l2, 0.0, m1p + m2p, 0.0, -l1],
        [0.0, 0.0, -l2, 0.0, v21_outflow, 0.0],
        [-l2, 0.0, 0.0, 0.0, -m1p, l1 + m2],
    ])


def theorem2_matrices(params: SystemParams, verbatim: bool = False,
                      options: EngineOptions = DEFAULT_OPTIONS) -> TheoremSystem:
    """
    사용자 1 관점의 NOMA 시스템 (A1, c1, A2, c2).
    verbatim=True 이면 A2 를 인쇄된 그대로 만든다 (진단용).
    """
    a1, c1 = _noma_stationary_system(params)
    pi = solve_dense(a1, c1, "NOMA stationary system", options)
    c2 = np.array([pi[0], pi[1], pi[1], pi[2], pi[2], pi[3]])
    return TheoremSystem(a1, c1, _noma_correlation_matrix(params, verbatim), c2)


def theorem2_typo_ledger(params: SystemParams) -> List[LedgerEntry]:
    """인쇄된 A2 와 수정된 A2 가 다른 항목 목록 (1-based)"""
    printed = _noma_correlation_matrix(params, verbatim=True)
    corrected = _noma_correlation_matrix(params, verbatim=False)
    rows, cols = np.nonzero(~np.isclose(printed, corrected, rtol=0.0, atol=0.0))
    return [
        LedgerEntry(int(r) + 1, int(c) + 1, float(printed[r, c]), float(corrected[r, c]))
        for r, c in zip(rows, cols)
    ]


def _noma_user_age(params: SystemParams, verbatim: bool, options: EngineOptions) -> float:
    system = theorem2_matrices(params, verbatim, options)
    v = solve_dense(system.a2, system.c2, "NOMA correlation system", options)
    return float(sum(v[i] for i in NOMA_AGE_INDICES))


def solve_theorem2(params: SystemParams, verbatim: bool = False,
                   options: EngineOptions = DEFAULT_OPTIONS) -> AgeReport:
    """
    NOMA 평균 AoI: 사용자 1 관점 4×4 / 6×6 시스템을 풀고,
    사용자 2 는 1 ↔ 2 교환한 파라미터로 같은 시스템을 푼다.
    """
    age1 = _noma_user_age(params, verbatim, options)
    age2 = _noma_user_age(params.swapped(), verbatim, options)
    return AgeReport.from_users("noma", "theorem-matrices", age1, age2, params)


# ===== OMA =====

def theorem3_matrices(params: SystemParams,
                      options: EngineOptions = DEFAULT_OPTIONS) -> TheoremSystem:
    """사용자 1 관점의 OMA 시스템 (A1 5×5, A2 8×8). μ' 는 사용하지 않는다."""
    l1, l2, m1, m2 = params.lambda1, params.lambda2, params.mu1, params.mu2
    a1 = np.array([
        [l1 + l2, -m1, -m2, 0.0, 0.0],
        [-l1, m1 + l2, 0.0, -m2, 0.0],
        [-l2, 0.0, l1 + m2, 0.0, -m1],
        [0.0, 0.0, -l1, m2, 0.0],
        [1.0, 1.0, 1.0, 1.0, 1.0],
    ])
    c1 = np.array([0.0, 0.0, 0.0, 0.0, 1.0])
    pi = solve_dense(a1, c1, "OMA stationary system", options)

    a2 = np.array([
        [l1 + l2, 0.0, -m1, -m2, 0.0, 0.0, 0.0, 0.0],
        [-l1, l2 + m1, 0.0, 0.0, -m2, 0.0, 0.0, 0.0],
        [0.0, 0.0, l1 + l2 + m1, 0.0, 0.0, -m2, 0.0, 0.0],
        [-l2, 0.0, 0.0, l1 + m2, 0.0, 0.0, 0.0, -m1],
        [0.0, 0.0, 0.0, -l1, m2, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, l1 + m2, 0.0, 0.0],
        [0.0, -l2, 0.0, 0.0, 0.0, 0.0, m1, 0.0],
        [0.0, 0.0, -l2, 0.0, 0.0, 0.0, 0.0, l1 + m1],
    ])
    c2 = np.array([pi[0], pi[1], pi[1], pi[2], pi[3], pi[3], pi[4], pi[4]])
    return TheoremSystem(a1, c1, a2, c2)


def _oma_user_age(params: SystemParams, options: EngineOptions) -> float:
    system = theorem3_matrices(params, options)
    v = solve_dense(system.a2, system.c2, "OMA correlation system", options)
    return float(sum(v[i] for i in OMA_AGE_INDICES))


def solve_theorem3(params: SystemParams,
                   options: EngineOptions = DEFAULT_OPTIONS) -> AgeReport:
    age1 = _oma_user_age(params, options)
    age2 = _oma_user_age(params.swapped(), options)
    return AgeReport.from_users("oma", "theorem-matrices", age1, age2, params)


def solve_theorem(params: SystemParams, scheme: str,
                  options: EngineOptions = DEFAULT_OPTIONS) -> AgeReport:
    if scheme == "noma":
        return solve_theorem2(params, options=options)
    if scheme == "oma":
        return solve_theorem3(params, options=options)
    raise ValueError(f"unknown scheme: {scheme}")


def reduced_engine_matrix(full_matrix: np.ndarray, age_dim: int,
                          unknowns: Tuple[Tuple[int, int], ...]) -> np.ndarray:
    """엔진이 조립한 전체 상관 시스템에서 축약 미지수에 해당하는 행/열만 뽑는다."""
    index = [q * age_dim + j for q, j in unknowns]
    return full_matrix[np.ix_(index, index)]
