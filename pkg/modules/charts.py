"""
NOMA / OMA 상태 업데이트 시스템의 SHS 차트 구성

사용자 관점 차트: x = [x0, x1]
  x0 : 모니터에서 본 해당 사용자의 AoI
  x1 : 시스템 안에 있는 해당 사용자 패킷의 AoI (패킷이 없으면 0)
사용자 2 관점은 파라미터의 1 ↔ 2 를 교환해 같은 차트를 만든다.

결합 차트: x = [x0, x1, x2, x3] (사용자 1 모니터/패킷, 사용자 2 모니터/패킷)
"""

from typing import List, Literal, Optional, Sequence, Tuple

from modules.shs_engine import EngineOptions, DEFAULT_OPTIONS, ShsChart, Transition, average_age
from modules.system_params import AgeReport, SystemParams

Perspective = Literal[1, 2]

NOMA_STATES = ["idle", "user{me} alone", "both", "user{other} alone"]
OMA_STATES = [
    "idle",
    "user{me} in service",
    "user{other} in service",
    "user{other} in service, user{me} waiting",
    "user{me} in service, user{other} waiting",
]


def reset_map(sources: Sequence[Optional[int]]) -> List[List[int]]:
    """
    출력 성분 j 가 입력 성분 sources[j] 를 그대로 받도록 하는 0/1 행렬.
    sources[j] 가 None 이면 x'_j = 0.  (x' = x · A 이므로 A[i][j] = 1)
    """
    dim = len(sources)
    matrix = [[0] * dim for _ in range(dim)]
    for j, i in enumerate(sources):
        if i is not None:
            matrix[i][j] = 1
    return matrix


def _transition(label: str, source: int, target: int, rate: float,
                sources: Sequence[Optional[int]]) -> Transition:
    return Transition(source=source, target=target, rate=rate, reset=reset_map(sources), label=label)


def _state_names(template: List[str], perspective: int) -> List[str]:
    other = 2 if perspective == 1 else 1
    return [name.format(me=perspective, other=other) for name in template]


def _oriented(params: SystemParams, perspective: int) -> SystemParams:
    if perspective not in (1, 2):
        raise ValueError(f"perspective must be 1 or 2, got {perspective}")
    return params if perspective == 1 else params.swapped()


# ===== 사용자 관점 차트 =====

def build_noma_chart(params: SystemParams, perspective: Perspective = 1) -> ShsChart:
    """
    4-상태 NOMA 차트 {0: 유휴, 1: 본인 단독, 2: 동시 서비스, 3: 상대 단독}.
    상태 2, 3 의 상대 도착(λ2) 자기전이는 AoI 와 무관하므로 생략한다.
    """
    p = _oriented(params, perspective)
    l1, l2, m1, m2 = p.lambda1, p.lambda2, p.mu1, p.mu2
    m1p, m2p = p.mu1p, p.mu2p

    transitions = [
        _transition("l=1", 0, 1, l1, [0, None]),
        _transition("l=2", 0, 3, l2, [0, None]),
        _transition("l=3", 1, 1, l1, [0, None]),
        _transition("l=4", 1, 0, m1, [1, None]),
        _transition("l=5", 1, 2, l2, [0, 1]),
        _transition("l=6", 2, 1, m2p, [0, 1]),
        _transition("l=7", 2, 2, l1, [0, None]),
        _transition("l=8", 2, 3, m1p, [1, None]),
        _transition("l=9", 3, 2, l1, [0, None]),
        _transition("l=10", 3, 0, m2, [0, None]),
    ]
    return ShsChart(
        states=_state_names(NOMA_STATES, perspective),
        age_dim=2,
        drift=[[1, 0], [1, 1], [1, 1], [1, 0]],
        transitions=transitions,
    )


def build_oma_chart(params: SystemParams, perspective: Perspective = 1) -> ShsChart:
    """
    5-상태 OMA 차트. 서비스 중인 사용자는 항상 한 명이고, 다른 사용자의 패킷은 대기한다.
    l=5 (본인 서비스 중 상대 도착) 의 목적 상태는 4 (상대 대기).
    """
    p = _oriented(params, perspective)
    l1, l2, m1, m2 = p.lambda1, p.lambda2, p.mu1, p.mu2

    transitions = [
        _transition("l=1", 0, 1, l1, [0, None]),
        _transition("l=2", 0, 2, l2, [0, None]),
        _transition("l=3", 1, 0, m1, [1, None]),
        _transition("l=4", 1, 1, l1, [0, None]),
        _transition("l=5", 1, 4, l2, [0, 1]),
        _transition("l=6", 2, 0, m2, [0, 1]),
        _transition("l=7", 2, 3, l1, [0, None]),
        _transition("l=8", 3, 3, l1, [0, None]),
        # 대기하던 본인 패킷은 생성 시각(= 패킷 AoI)을 유지한 채 서비스 시작
        _transition("l=9", 3, 1, m2, [0, 1]),
        _transition("l=10", 4, 4, l1, [0, None]),
        _transition("l=11", 4, 2, m1, [1, None]),
    ]
    return ShsChart(
        states=_state_names(OMA_STATES, perspective),
        age_dim=2,
        drift=[[1, 0], [1, 1], [1, 0], [1, 1], [1, 1]],
        transitions=transitions,
    )


# ===== 4차원 결합 차트 =====

def build_joint_chart(params: SystemParams, scheme: str) -> ShsChart:
    """
    두 사용자의 AoI 를 동시에 추적하는 차트. average_age(chart, [0, 2]) 가 총 AoI.
    사용자 관점 차트에서 생략했던 상대 도착 자기전이도 여기서는 x3 / x1 을 리셋하므로 포함한다.
    """
    l1, l2, m1, m2 = params.lambda1, params.lambda2, params.mu1, params.mu2
    N = None

    if scheme == "noma":
        m1p, m2p = params.mu1p, params.mu2p
        transitions = [
            _transition("0:a1", 0, 1, l1, [0, N, 2, N]),
            _transition("0:a2", 0, 3, l2, [0, N, 2, N]),
            _transition("1:a1", 1, 1, l1, [0, N, 2, N]),
            _transition("1:s1", 1, 0, m1, [1, N, 2, N]),
            _transition("1:a2", 1, 2, l2, [0, 1, 2, N]),
            _transition("2:a1", 2, 2, l1, [0, N, 2, 3]),
            _transition("2:a2", 2, 2, l2, [0, 1, 2, N]),
            _transition("2:s1", 2, 3, m1p, [1, N, 2, 3]),
            _transition("2:s2", 2, 1, m2p, [0, 1, 3, N]),
            _transition("3:a1", 3, 2, l1, [0, N, 2, 3]),
            _transition("3:a2", 3, 3, l2, [0, N, 2, N]),
            _transition("3:s2", 3, 0, m2, [0, N, 3, N]),
        ]
        return ShsChart(
            states=["idle", "user1 alone", "both", "user2 alone"],
            age_dim=4,
            drift=[[1, 0, 1, 0], [1, 1, 1, 0], [1, 1, 1, 1], [1, 0, 1, 1]],
            transitions=transitions,
        )

    if scheme == "oma":
        transitions = [
            _transition("0:a1", 0, 1, l1, [0, N, 2, N]),
            _transition("0:a2", 0, 2, l2, [0, N, 2, N]),
            _transition("1:a1", 1, 1, l1, [0, N, 2, N]),
            _transition("1:s1", 1, 0, m1, [1, N, 2, N]),
            _transition("1:a2", 1, 4, l2, [0, 1, 2, N]),
            _transition("2:a1", 2, 3, l1, [0, N, 2, 3]),
            _transition("2:a2", 2, 2, l2, [0, N, 2, N]),
            _transition("2:s2", 2, 0, m2, [0, N, 3, N]),
            _transition("3:a1", 3, 3, l1, [0, N, 2, 3]),
            _transition("3:a2", 3, 3, l2, [0, 1, 2, N]),
            _transition("3:s2", 3, 1, m2, [0, 1, 3, N]),
            _transition("4:a1", 4, 4, l1, [0, N, 2, 3]),
            _transition("4:a2", 4, 4, l2, [0, 1, 2, N]),
            _transition("4:s1", 4, 2, m1, [1, N, 2, 3]),
        ]
        return ShsChart(
            states=_state_names(OMA_STATES, 1),
            age_dim=4,
            drift=[[1, 0, 1, 0], [1, 1, 1, 0], [1, 0, 1, 1], [1, 1, 1, 1], [1, 1, 1, 1]],
            transitions=transitions,
        )

    raise ValueError(f"unknown scheme: {scheme}")


def build_chart(params: SystemParams, scheme: str, perspective: Perspective = 1) -> ShsChart:
    if scheme == "noma":
        return build_noma_chart(params, perspective)
    if scheme == "oma":
        return build_oma_chart(params, perspective)
    raise ValueError(f"unknown scheme: {scheme}")


# ===== 엔진 경로 AoI =====

def per_user_ages(params: SystemParams, scheme: str,
                  options: EngineOptions = DEFAULT_OPTIONS) -> Tuple[float, float]:
    age1 = average_age(build_chart(params, scheme, 1), [0], options)
    age2 = average_age(build_chart(params, scheme, 2), [0], options)
    return age1, age2


def engine_age_report(params: SystemParams, scheme: str,
                      options: EngineOptions = DEFAULT_OPTIONS) -> AgeReport:
    """사용자 관점 차트 두 개를 풀어 Δ̄1, Δ̄2 를 구하고 합산"""
    age1, age2 = per_user_ages(params, scheme, options)
    return AgeReport.from_users(scheme, "engine", age1, age2, params)


def joint_total_age(params: SystemParams, scheme: str,
                    options: EngineOptions = DEFAULT_OPTIONS) -> float:
    return average_age(build_joint_chart(params, scheme), [0, 2], options)
