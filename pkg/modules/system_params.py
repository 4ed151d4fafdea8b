"""
2-사용자 상태 업데이트 시스템 파라미터 모델

- 도착률 λ1, λ2 / 단독 서비스율 μ1, μ2 / NOMA 중첩 서비스율 μ'1, μ'2
- μ' 는 직접 지정(explicit) 하거나 (α, δ) 로부터 유도(alpha) 한다
- AgeReport: 사용자별 / 전체 평균 AoI 결과 (계산 방법 태그 포함)
"""

import json
import math
from pathlib import Path
from typing import Annotated, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from config.settings import ALPHA_RANGE, DEFAULT_DELTA

PositiveRate = Annotated[float, Field(gt=0, allow_inf_nan=False)]


class InfeasibleParamsError(ValueError):
    """NOMA 단독 전송률 제약 (μ'_k < μ_k) 위반"""


# ===== 파라미터 모델 =====

class NomaConfig(BaseModel):
    """
    NOMA 서비스율 설정.
      mode="alpha"    : μ'1 = α·δ·μ1, μ'2 = α·(1-δ)·μ2
      mode="explicit" : μ'1, μ'2 를 그대로 사용 (δ 는 제약 검사에만 쓰임)
    """
    model_config = ConfigDict(frozen=True)

    mode: Literal["alpha", "explicit"] = "alpha"
    alpha: Optional[float] = Field(default=None, ge=ALPHA_RANGE[0], le=ALPHA_RANGE[1])
    delta: float = Field(default=DEFAULT_DELTA, gt=0, lt=1)
    mu1p: Optional[float] = Field(default=None, gt=0, allow_inf_nan=False)
    mu2p: Optional[float] = Field(default=None, gt=0, allow_inf_nan=False)

    @model_validator(mode="after")
    def _check_mode_fields(self):
        if self.mode == "alpha" and self.alpha is None:
            raise ValueError("noma.mode='alpha' requires 'alpha'")
        if self.mode == "explicit" and (self.mu1p is None or self.mu2p is None):
            raise ValueError("noma.mode='explicit' requires 'mu1p' and 'mu2p'")
        return self


class SystemParams(BaseModel):
    """
    여섯 개의 전송률 파라미터. JSON 정규형:
    {"lambda1", "lambda2", "mu1", "mu2", "noma": {"mode", "alpha", "delta", "mu1p", "mu2p"}}
    """
    model_config = ConfigDict(frozen=True)

    lambda1: PositiveRate
    lambda2: PositiveRate
    mu1: PositiveRate
    mu2: PositiveRate
    noma: NomaConfig

    @property
    def mu1p(self) -> float:
        if self.noma.mode == "explicit":
            return self.noma.mu1p
        return noma_rates_from_alpha(self.mu1, self.mu2, self.noma.alpha, self.noma.delta)[0]

    @property
    def mu2p(self) -> float:
        if self.noma.mode == "explicit":
            return self.noma.mu2p
        return noma_rates_from_alpha(self.mu1, self.mu2, self.noma.alpha, self.noma.delta)[1]

    @property
    def delta(self) -> float:
        return self.noma.delta

    @property
    def derivation(self) -> str:
        if self.noma.mode == "alpha":
            return f"alpha-delta({self.noma.alpha}, {self.noma.delta})"
        return "explicit"

    def rates(self) -> Tuple[float, float, float, float, float, float]:
        return (self.lambda1, self.lambda2, self.mu1, self.mu2, self.mu1p, self.mu2p)

    # ----- 파생 파라미터 -----

    def swapped(self) -> "SystemParams":
        """사용자 1 ↔ 2 교환. alpha 모드에서는 δ → 1-δ 로 바꿔 μ' 도 같이 교환된다."""
        if self.noma.mode == "alpha":
            noma = self.noma.model_copy(update={"delta": 1.0 - self.noma.delta})
        else:
            noma = self.noma.model_copy(update={"mu1p": self.noma.mu2p, "mu2p": self.noma.mu1p,
                                                "delta": 1.0 - self.noma.delta})
        return SystemParams(
            lambda1=self.lambda2, lambda2=self.lambda1,
            mu1=self.mu2, mu2=self.mu1,
            noma=noma,
        )

    def with_lambda(self, lam: float, lam2: Optional[float] = None) -> "SystemParams":
        """λ1 = λ2 = lam (lam2 를 주면 λ2 = lam2)"""
        return self.model_copy(update={"lambda1": lam, "lambda2": lam if lam2 is None else lam2})

    def with_alpha(self, alpha: float) -> "SystemParams":
        noma = NomaConfig(mode="alpha", alpha=alpha, delta=self.noma.delta)
        return self.model_copy(update={"noma": noma})

    def scaled(self, factor: float) -> "SystemParams":
        """모든 전송률에 factor 를 곱한다 (시간축 재조정)"""
        noma = self.noma
        if noma.mode == "explicit":
            noma = noma.model_copy(update={"mu1p": noma.mu1p * factor, "mu2p": noma.mu2p * factor})
        return self.model_copy(update={
            "lambda1": self.lambda1 * factor, "lambda2": self.lambda2 * factor,
            "mu1": self.mu1 * factor, "mu2": self.mu2 * factor, "noma": noma,
        })


def load_params(path: str | Path) -> SystemParams:
    """
    설정 JSON 파일을 읽어 SystemParams 로 검증한다.
    JSON 문법 오류는 json.JSONDecodeError, 값 오류는 pydantic.ValidationError.
    """
    with open(path, "r", encoding="utf-8") as f:
        return SystemParams.model_validate(json.load(f))


# ===== NOMA 서비스율 / 제약 =====

def noma_rates_from_alpha(mu1: float, mu2: float, alpha: float, delta: float) -> Tuple[float, float]:
    """
    μ'1 = α·δ·μ1, μ'2 = α·(1-δ)·μ2
    합은 α(δμ1 + (1-δ)μ2) 이므로 α > 1 일 때만 합 제약이 엄격히 성립한다.
    """
    return alpha * delta * mu1, alpha * (1.0 - delta) * mu2


class ConstraintCheck(BaseModel):
    name: str
    status: Literal["ok", "boundary", "violated"]
    message: str


class FeasibilityVerdict(BaseModel):
    checks: List[ConstraintCheck]

    @property
    def feasible(self) -> bool:
        return all(c.status != "violated" for c in self.checks)

    @property
    def warnings(self) -> List[ConstraintCheck]:
        return [c for c in self.checks if c.status == "boundary"]

    @property
    def violations(self) -> List[ConstraintCheck]:
        return [c for c in self.checks if c.status == "violated"]

    def violated_names(self) -> List[str]:
        return [c.name for c in self.violations]


def _compare(lhs: float, rhs: float, rel_tol: float = 1e-12) -> int:
    """lhs < rhs → -1, 같음(상대 오차 이내) → 0, lhs > rhs → 1"""
    if math.isclose(lhs, rhs, rel_tol=rel_tol, abs_tol=0.0):
        return 0
    return -1 if lhs < rhs else 1


def check_noma_constraints(params: SystemParams, delta: Optional[float] = None) -> FeasibilityVerdict:
    """
    세 개의 부등식을 개별적으로 판정한다.
      solo_rate_user1 : μ'1 < μ1
      solo_rate_user2 : μ'2 < μ2
      sum_rate        : μ'1 + μ'2 > δμ1 + (1-δ)μ2
    등호(α=1, α=2 with δ=0.5 등)는 실패가 아니라 boundary 경고로 보고한다.
    """
    delta = params.delta if delta is None else delta
    checks: List[ConstraintCheck] = []

    for user, mup, mu in ((1, params.mu1p, params.mu1), (2, params.mu2p, params.mu2)):
        name = f"solo_rate_user{user}"
        cmp = _compare(mup, mu)
        if cmp < 0:
            checks.append(ConstraintCheck(name=name, status="ok",
                                          message=f"mu{user}p={mup:g} < mu{user}={mu:g}"))
        elif cmp == 0:
            checks.append(ConstraintCheck(name=name, status="boundary",
                                          message=f"solo rate constraint holds with equality for user {user}"))
        else:
            checks.append(ConstraintCheck(name=name, status="violated",
                                          message=f"solo rate constraint fails for user {user}: "
                                                  f"mu{user}p={mup:g} > mu{user}={mu:g}"))

    total = params.mu1p + params.mu2p
    shared = delta * params.mu1 + (1.0 - delta) * params.mu2
    cmp = _compare(total, shared)
    if cmp > 0:
        checks.append(ConstraintCheck(name="sum_rate", status="ok",
                                      message=f"sum {total:g} > shared rate {shared:g}"))
    elif cmp == 0:
        checks.append(ConstraintCheck(name="sum_rate", status="boundary",
                                      message="sum rate constraint holds with equality"))
    else:
        checks.append(ConstraintCheck(name="sum_rate", status="violated",
                                      message=f"sum rate constraint fails: sum {total:g} < shared rate {shared:g}"))

    return FeasibilityVerdict(checks=checks)


def require_feasible(params: SystemParams) -> FeasibilityVerdict:
    """μ'_k > μ_k 이면 InfeasibleParamsError. boundary 는 통과."""
    verdict = check_noma_constraints(params)
    solo_failures = [c for c in verdict.violations if c.name.startswith("solo_rate")]
    if solo_failures:
        raise InfeasibleParamsError("; ".join(c.message for c in solo_failures))
    return verdict


# ===== 결과 모델 =====

AgeMethod = Literal["engine", "theorem-matrices", "limit-formula", "simulation"]
Scheme = Literal["noma", "oma"]


class AgeReport(BaseModel):
    """사용자별 / 전체 평균 AoI (Δ̄ = Δ̄1 + Δ̄2)"""
    scheme: Scheme
    method: AgeMethod
    age_user1: float = Field(ge=0)
    age_user2: float = Field(ge=0)
    age_total: float = Field(ge=0)
    params: SystemParams

    @model_validator(mode="after")
    def _check_additivity(self):
        if abs(self.age_total - (self.age_user1 + self.age_user2)) > 1e-9 * max(1.0, self.age_total):
            raise ValueError("age_total must equal age_user1 + age_user2")
        return self

    @classmethod
    def from_users(cls, scheme: str, method: str, age1: float, age2: float,
                   params: SystemParams) -> "AgeReport":
        return cls(scheme=scheme, method=method, age_user1=age1, age_user2=age2,
                   age_total=age1 + age2, params=params)

    def flat(self) -> dict:
        """CSV 한 행에 들어가는 평탄화된 dict"""
        row = {
            "scheme": self.scheme,
            "method": self.method,
            "age_user1": self.age_user1,
            "age_user2": self.age_user2,
            "age_total": self.age_total,
            "lambda1": self.params.lambda1,
            "lambda2": self.params.lambda2,
            "mu1": self.params.mu1,
            "mu2": self.params.mu2,
            "mu1p": self.params.mu1p,
            "mu2p": self.params.mu2p,
        }
        return row
