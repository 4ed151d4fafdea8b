"""
Stochastic Hybrid System(SHS) 기반 평균 AoI 계산 엔진

임의의 유한 차트(상태 집합, drift 벡터, 전이 + reset 맵)에 대해
  1) 이산 마르코프 체인의 정상분포 π
  2) 상관벡터 v_q = lim E[x(t) 1{q(t)=q}]
를 구하고, v 의 모니터 AoI 성분을 더해 평균 AoI 를 계산한다.

reset 맵은 행벡터 기준 x' = x · A 로 적용한다.
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from config.settings import (
    BALANCE_TOL,
    CLAMP_TOL,
    CORRELATION_TOL,
    MAX_CONDITION,
)
from modules.utils import logger


class SingularSystemError(ArithmeticError):
    """선형 시스템이 특이하거나 잔차 검사를 통과하지 못함"""


class ChartValidationError(ValueError):
    """차트가 SHS 전제조건(양의 전이율, 강연결 등)을 만족하지 않음"""

    def __init__(self, verdict: "ChartVerdict"):
        self.verdict = verdict
        super().__init__("; ".join(v.message for v in verdict.violations))


# ===== 차트 모델 =====

class Transition(BaseModel):
    """SHS 전이 l: (q_l → q'_l), 전이율 λ^(l), reset 맵 A_l"""
    model_config = ConfigDict(frozen=True)

    source: int
    target: int
    rate: float
    reset: List[List[int]]
    label: str = ""

    @property
    def is_self_loop(self) -> bool:
        return self.source == self.target


class ShsChart(BaseModel):
    """
    선언형 SHS 차트. 파싱 단계에서는 구조(타입)만 검사하고,
    값에 대한 불변식은 validate_chart 가 판정한다.
    """
    model_config = ConfigDict(frozen=True)

    states: List[str]
    age_dim: int
    drift: List[List[int]]
    transitions: List[Transition]

    @property
    def n_states(self) -> int:
        return len(self.states)

    def drift_matrix(self) -> np.ndarray:
        return np.asarray(self.drift, dtype=float)

    def max_rate(self) -> float:
        return max((abs(t.rate) for t in self.transitions), default=1.0)


class EngineOptions(BaseModel):
    """엔진 허용 오차. 잔차 검사는 차트의 최대 전이율로 스케일된다."""
    model_config = ConfigDict(frozen=True)

    balance_tol: float = Field(default=BALANCE_TOL, gt=0)
    correlation_tol: float = Field(default=CORRELATION_TOL, gt=0)
    clamp_tol: float = Field(default=CLAMP_TOL, ge=0)
    max_condition: float = Field(default=MAX_CONDITION, gt=1)


DEFAULT_OPTIONS = EngineOptions()


@dataclass(frozen=True)
class StationaryDistribution:
    probabilities: np.ndarray

    def __getitem__(self, q: int) -> float:
        return float(self.probabilities[q])


@dataclass(frozen=True)
class CorrelationTable:
    # shape (n_states, age_dim)
    v: np.ndarray

    def component_sum(self, components: Sequence[int]) -> float:
        return float(self.v[:, list(components)].sum())


@dataclass(frozen=True)
class ShsSolution:
    pi: StationaryDistribution
    table: CorrelationTable
    balance_residual: float
    correlation_residual: float

    def average_age(self, components: Sequence[int]) -> float:
        return self.table.component_sum(components)


# ===== 검증 =====

class Violation(BaseModel):
    code: str
    message: str
    index: Optional[int] = None


class ChartVerdict(BaseModel):
    violations: List[Violation] = []

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> List[str]:
        return [v.code for v in self.violations]


def _strongly_connected(n_states: int, edges: List[Tuple[int, int]]) -> bool:
    """자기전이를 제외한 방향 그래프가 강연결 성분 하나로 이루어졌는지"""
    if n_states <= 1:
        return True
    if not edges:
        return False
    src, dst = zip(*edges)
    graph = csr_matrix((np.ones(len(edges)), (src, dst)), shape=(n_states, n_states))
    n_components, _ = connected_components(graph, directed=True, connection="strong")
    return n_components == 1


def validate_chart(chart: ShsChart) -> ChartVerdict:
    """
    차트 불변식 검사. 예외를 던지지 않고 위반 목록을 돌려준다.
    @param chart: 검사할 SHS 차트
    @returns: ChartVerdict (ok 이면 위반 없음)
    """
    violations: List[Violation] = []
    n, d = chart.n_states, chart.age_dim

    if n <= 0:
        violations.append(Violation(code="empty_state_set", message="state set is empty"))
    if d <= 0:
        violations.append(Violation(code="bad_age_dim", message=f"age_dim must be positive, got {d}"))

    # drift 벡터
    if len(chart.drift) != n:
        violations.append(Violation(
            code="drift_shape",
            message=f"drift has {len(chart.drift)} rows for {n} states",
        ))
    for q, row in enumerate(chart.drift):
        if len(row) != d:
            violations.append(Violation(
                code="drift_shape", index=q,
                message=f"drift of state {q} has length {len(row)}, expected {d}",
            ))
        if any(b not in (0, 1) for b in row):
            violations.append(Violation(
                code="drift_not_binary", index=q,
                message=f"drift of state {q} has entries outside {{0, 1}}",
            ))

    # 전이
    edges: List[Tuple[int, int]] = []
    for k, tr in enumerate(chart.transitions):
        endpoints_ok = True
        for name, q in (("source", tr.source), ("target", tr.target)):
            if not 0 <= q < n:
                endpoints_ok = False
                violations.append(Violation(
                    code="state_out_of_range", index=k,
                    message=f"{name} {q} of transition {k} is outside [0, {n})",
                ))
        if not np.isfinite(tr.rate):
            violations.append(Violation(
                code="nonfinite_rate", index=k,
                message=f"nonfinite rate at transition {k}",
            ))
        elif tr.rate <= 0:
            violations.append(Violation(
                code="nonpositive_rate", index=k,
                message=f"nonpositive rate at transition {k}",
            ))

        reset = tr.reset
        if len(reset) != d or any(len(row) != d for row in reset):
            violations.append(Violation(
                code="reset_shape", index=k,
                message=f"reset of transition {k} is not {d}x{d}",
            ))
        else:
            matrix = np.asarray(reset)
            if not np.isin(matrix, (0, 1)).all():
                violations.append(Violation(
                    code="reset_not_binary", index=k,
                    message=f"reset of transition {k} has entries outside {{0, 1}}",
                ))
            # 각 출력 성분은 입력 성분 하나 또는 0 이어야 함
            elif (matrix.sum(axis=0) > 1).any():
                violations.append(Violation(
                    code="reset_amplifies", index=k,
                    message=f"reset of transition {k} sums several components into one",
                ))

        if endpoints_ok and not tr.is_self_loop:
            edges.append((tr.source, tr.target))

    if n > 0 and not _strongly_connected(n, edges):
        violations.append(Violation(
            code="not_strongly_connected",
            message="not strongly connected: the chain on non-self transitions is reducible",
        ))

    return ChartVerdict(violations=violations)


def ensure_valid(chart: ShsChart) -> None:
    verdict = validate_chart(chart)
    if not verdict.ok:
        raise ChartValidationError(verdict)


# ===== 선형 시스템 =====

def solve_dense(
    matrix: np.ndarray,
    rhs: np.ndarray,
    what: str,
    options: EngineOptions = DEFAULT_OPTIONS,
) -> np.ndarray:
    """
    부분 피벗 LU(LAPACK gesv)로 작은 밀집 시스템을 푼다.
    조건수가 너무 크거나 풀이가 실패하면 SingularSystemError.
    """
    cond = np.linalg.cond(matrix)
    if not np.isfinite(cond) or cond > options.max_condition:
        raise SingularSystemError(f"{what}: system is singular or ill-conditioned (cond={cond:.3g})")
    try:
        return np.linalg.solve(matrix, rhs)
    except np.linalg.LinAlgError as e:
        raise SingularSystemError(f"{what}: {e}") from e


def _clamp_nonnegative(values: np.ndarray, tol: float, what: str) -> np.ndarray:
    if (values < -tol).any():
        raise SingularSystemError(
            f"{what}: solution has negative entries (min={values.min():.3g})"
        )
    return np.where(values < 0.0, 0.0, values)


def generator_matrix(chart: ShsChart) -> np.ndarray:
    """CTMC 생성행렬 Q. 자기전이는 상쇄되므로 제외."""
    n = chart.n_states
    gen = np.zeros((n, n))
    for tr in chart.transitions:
        if tr.is_self_loop:
            continue
        gen[tr.source, tr.target] += tr.rate
        gen[tr.source, tr.source] -= tr.rate
    return gen


def balance_residual(chart: ShsChart, pi: StationaryDistribution) -> float:
    """‖π Q‖∞"""
    return float(np.abs(pi.probabilities @ generator_matrix(chart)).max())


def stationary_distribution(
    chart: ShsChart,
    options: EngineOptions = DEFAULT_OPTIONS,
) -> StationaryDistribution:
    """
    균형방정식 π Q = 0 과 Σπ = 1 을 푼다.
    마지막 균형식을 정규화 식으로 대체하여 정방 시스템을 만든다.
    """
    n = chart.n_states
    system = generator_matrix(chart).T.copy()
    system[n - 1, :] = 1.0
    rhs = np.zeros(n)
    rhs[n - 1] = 1.0

    probs = solve_dense(system, rhs, "stationary distribution", options)
    probs = _clamp_nonnegative(probs, options.clamp_tol, "stationary distribution")
    probs = probs / probs.sum()
    pi = StationaryDistribution(probabilities=probs)

    residual = balance_residual(chart, pi)
    limit = options.balance_tol * max(1.0, chart.max_rate())
    if residual > limit:
        raise SingularSystemError(
            f"stationary distribution: balance residual {residual:.3g} exceeds {limit:.3g}"
        )
    logger.debug(f"[SOLVE] pi={np.round(probs, 6).tolist()} residual={residual:.3g}")
    return pi


def correlation_system(
    chart: ShsChart,
    pi: StationaryDistribution,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    상관벡터 방정식
        v_q (Σ_{l∈L_q} λ^(l)) = b_q π_q + Σ_{l∈L'_q} λ^(l) v_{q_l} A_l
    을 미지수 순서 (q, j) → q·age_dim + j 로 조립한다. 자기전이는 양변 모두에 포함.
    """
    n, d = chart.n_states, chart.age_dim
    size = n * d
    matrix = np.zeros((size, size))
    drift = chart.drift_matrix()

    outflow = np.zeros(n)
    for tr in chart.transitions:
        outflow[tr.source] += tr.rate

    for q in range(n):
        for j in range(d):
            matrix[q * d + j, q * d + j] += outflow[q]

    for tr in chart.transitions:
        reset = np.asarray(tr.reset, dtype=float)
        src, dst = tr.source, tr.target
        # (v_src A)[j] = Σ_i v_src,i A[i, j]
        for i, j in zip(*np.nonzero(reset)):
            matrix[dst * d + j, src * d + i] -= tr.rate * reset[i, j]

    rhs = (drift * pi.probabilities[:, None]).reshape(size)
    return matrix, rhs


def correlation_residual(
    chart: ShsChart,
    pi: StationaryDistribution,
    table: CorrelationTable,
) -> float:
    matrix, rhs = correlation_system(chart, pi)
    return float(np.abs(matrix @ table.v.reshape(-1) - rhs).max())


def correlation_table(
    chart: ShsChart,
    pi: StationaryDistribution,
    options: EngineOptions = DEFAULT_OPTIONS,
) -> CorrelationTable:
    """
    n_states·age_dim 전체 시스템을 푼다. 특정 성분을 0으로 가정하지 않으며,
    패킷이 없는 상태의 패킷 AoI 성분은 풀이 결과로 0이 나온다.
    """
    matrix, rhs = correlation_system(chart, pi)
    try:
        flat = solve_dense(matrix, rhs, "correlation vectors", options)
    except SingularSystemError as e:
        raise SingularSystemError(
            f"{e} (the chart admits no finite correlation solution; "
            "average age is undefined for it)"
        ) from e

    flat = _clamp_nonnegative(flat, options.clamp_tol * max(1.0, np.abs(flat).max()),
                              "correlation vectors")
    table = CorrelationTable(v=flat.reshape(chart.n_states, chart.age_dim))

    residual = float(np.abs(matrix @ flat - rhs).max())
    limit = options.correlation_tol * (1.0 + float(np.abs(flat).max())) * max(1.0, chart.max_rate())
    if residual > limit:
        raise SingularSystemError(
            f"correlation vectors: residual {residual:.3g} exceeds {limit:.3g}"
        )
    logger.debug(f"[SOLVE] correlation residual={residual:.3g}")
    return table


def solve_chart(chart: ShsChart, options: EngineOptions = DEFAULT_OPTIONS) -> ShsSolution:
    """검증 → π → v 를 한 번에 수행하고 잔차를 함께 돌려준다."""
    ensure_valid(chart)
    pi = stationary_distribution(chart, options)
    table = correlation_table(chart, pi, options)
    return ShsSolution(
        pi=pi,
        table=table,
        balance_residual=balance_residual(chart, pi),
        correlation_residual=correlation_residual(chart, pi, table),
    )


def average_age(
    chart: ShsChart,
    components: Sequence[int],
    options: EngineOptions = DEFAULT_OPTIONS,
) -> float:
    """
    선택한 AoI 성분들의 Σ_q v_qj.
    사용자 관점 차트에서는 [0], 4차원 결합 차트에서는 [0, 2] 가 총 AoI.
    """
    return solve_chart(chart, options).average_age(components)


# ===== 직렬화 =====

def load_chart(path: str | Path) -> ShsChart:
    with open(path, "r", encoding="utf-8") as f:
        return ShsChart.model_validate(json.load(f))


def save_chart(chart: ShsChart, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(chart.model_dump_json(indent=2))
        f.write("\n")
