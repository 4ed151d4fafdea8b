"""
NOMA vs OMA 비교: 포화(λ→∞) 극한 공식, 교차 α*, 승자 판정
"""

from typing import Literal, Optional

from pydantic import BaseModel
from scipy.optimize import bisect

from config.settings import ALPHA_RANGE, CROSSOVER_XTOL, TIE_EPS
from modules.system_params import AgeReport, SystemParams, noma_rates_from_alpha

Winner = Literal["OMA", "NOMA", "tie"]


# ===== 극한 공식 =====

def oma_limit_total(mu1: float, mu2: float) -> float:
    """
    λ→∞ 에서 OMA 는 라운드 로빈이 되어 총 AoI 가
    1/μ1 + 1/μ2 + (1/μ1)/(1 + μ1/μ2) + (1/μ2)/(1 + μ2/μ1)
    """
    a, b = 1.0 / mu1, 1.0 / mu2
    return a + b + a / (1.0 + mu1 / mu2) + b / (1.0 + mu2 / mu1)


def noma_limit_total(mu1p: float, mu2p: float) -> float:
    """λ→∞ 에서 두 사용자가 항상 동시 전송: 1/μ'1 + 1/μ'2"""
    return 1.0 / mu1p + 1.0 / mu2p


def limit_age_report(params: SystemParams, scheme: str) -> AgeReport:
    """
    극한 공식의 사용자별 분해.
    NOMA: 사용자 k 는 1/μ'k
    OMA : 두 사용자 모두 도착 간격 S1 + S2 를 겪으므로 (a² + ab + b²)/(a + b), a=1/μ1, b=1/μ2
    """
    if scheme == "noma":
        age1, age2 = 1.0 / params.mu1p, 1.0 / params.mu2p
    elif scheme == "oma":
        a, b = 1.0 / params.mu1, 1.0 / params.mu2
        age1 = age2 = (a * a + a * b + b * b) / (a + b)
    else:
        raise ValueError(f"unknown scheme: {scheme}")
    return AgeReport.from_users(scheme, "limit-formula", age1, age2, params)


# ===== 교차점 =====

def crossover_alpha(mu1: float, mu2: float, delta: float,
                    xtol: float = CROSSOVER_XTOL) -> Optional[float]:
    """
    noma_limit_total(α δ μ1, α (1-δ) μ2) = oma_limit_total(μ1, μ2) 를 만족하는 α ∈ [1, 2].
    NOMA 극한은 α 에 대해 엄격히 감소하므로 해는 유일하다. 구간 안에 없으면 None.
    """
    target = oma_limit_total(mu1, mu2)

    def gap(alpha: float) -> float:
        return noma_limit_total(*noma_rates_from_alpha(mu1, mu2, alpha, delta)) - target

    lo, hi = ALPHA_RANGE
    g_lo, g_hi = gap(lo), gap(hi)
    if g_lo == 0.0:
        return lo
    if g_hi == 0.0:
        return hi
    # α=1 에서 이미 NOMA 가 낫거나, α=2 에서도 OMA 가 나음
    if g_lo < 0.0 or g_hi > 0.0:
        return None
    return float(bisect(gap, lo, hi, xtol=xtol))


# ===== 승자 판정 =====

def decide_winner(oma_total: float, noma_total: float, eps: float = TIE_EPS) -> Winner:
    """총 AoI 가 작은 쪽이 승자. 차이가 eps·max(1, |값|) 이하이면 tie."""
    scale = max(1.0, abs(oma_total), abs(noma_total))
    if abs(oma_total - noma_total) <= eps * scale:
        return "tie"
    return "OMA" if oma_total < noma_total else "NOMA"


class ComparisonRow(BaseModel):
    """스윕 격자점 하나의 비교 결과"""
    value: float
    oma_total: float
    noma_total: float
    oma_user1: float
    oma_user2: float
    noma_user1: float
    noma_user2: float
    winner: Winner
    oma_method: str = "engine"
    noma_method: str = "engine"

    @classmethod
    def from_reports(cls, value: float, oma: AgeReport, noma: AgeReport,
                     eps: float = TIE_EPS) -> "ComparisonRow":
        return cls(
            value=value,
            oma_total=oma.age_total,
            noma_total=noma.age_total,
            oma_user1=oma.age_user1,
            oma_user2=oma.age_user2,
            noma_user1=noma.age_user1,
            noma_user2=noma.age_user2,
            winner=decide_winner(oma.age_total, noma.age_total, eps),
            oma_method=oma.method,
            noma_method=noma.method,
        )
