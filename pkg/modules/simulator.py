"""
2-사용자 선점형 상태 업데이트 시스템의 이산 사건 시뮬레이터 (NOMA / OMA)

- 사용자별로 패킷은 최대 1개. 새 도착은 대기/서비스 중인 자기 패킷을 버리고 대체한다.
- NOMA: 두 사용자 모두 패킷이 있으면 동시에 서비스 (μ'1, μ'2), 혼자면 μk.
- OMA : 한 번에 한 사용자만 서비스 (μk). 상대 패킷은 대기하다가 생성 시각을 유지한 채 서비스 시작.
- 모든 시계가 지수분포이므로 매 사건마다 남은 시간을 재표본해도 분포가 같다.
  (경쟁 지수 시계: dt ~ Exp(Σ rate), 사건 종류는 rate 비례로 선택)

재현성: numpy Generator(PCG64(seed)) 에서 RNG_BLOCK_SIZE 단위로 난수를 뽑는다.
스윕 격자점 i 의 시드는 base_seed + i.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.stats import t as student_t

from config.settings import (
    CI_LEVEL,
    CSV_FLOAT_FORMAT,
    DEFAULT_BATCHES,
    DEFAULT_EVENTS,
    DEFAULT_SEED,
    DEFAULT_WARMUP_FRACTION,
    RNG_BLOCK_SIZE,
    TRACE_ROW_LIMIT,
)
from modules.system_params import SystemParams
from modules.utils import logger


class SimulationInvariantError(RuntimeError):
    """시뮬레이션 중 AoI / 서비스 불변식 위반"""


# ===== 설정 / 결과 =====

class SimConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    scheme: Literal["noma", "oma"]
    seed: int = Field(default=DEFAULT_SEED, ge=0, lt=2**64)
    max_events: int = Field(default=DEFAULT_EVENTS, gt=0)
    warmup_fraction: float = Field(default=DEFAULT_WARMUP_FRACTION, ge=0.0, lt=1.0)
    batches: int = Field(default=DEFAULT_BATCHES, gt=0)
    check_invariants: bool = False
    trace_path: Optional[str] = None
    trace_limit: int = Field(default=TRACE_ROW_LIMIT, ge=0)

    @model_validator(mode="after")
    def _check_event_budget(self):
        if self.max_events < 10 * self.batches:
            raise ValueError(
                f"max_events ({self.max_events}) must be at least 10 * batches ({10 * self.batches})"
            )
        if self.batches < 2:
            raise ValueError("batch means need at least 2 batches")
        if self.max_events - int(self.warmup_fraction * self.max_events) < self.batches:
            raise ValueError("warmup leaves fewer events than batches")
        return self


class SimResult(BaseModel):
    scheme: Literal["noma", "oma"]
    age_user1: float = Field(ge=0)
    age_user2: float = Field(ge=0)
    age_total: float = Field(ge=0)
    ci_half_width_user1: float = Field(ge=0)
    ci_half_width_user2: float = Field(ge=0)
    std_error_user1: float = Field(ge=0)
    std_error_user2: float = Field(ge=0)
    events_processed: int
    sim_time: float
    seed: int
    state_occupancy: List[float]


@dataclass(frozen=True)
class PacketRecord:
    """시스템 안의 패킷 1개. 전달되면 generation_time 이 모니터의 U_k 가 된다."""
    generation_time: float


# ===== 사건 테이블 =====

ARRIVAL_1, ARRIVAL_2, SERVICE_1, SERVICE_2 = range(4)
EVENT_NAMES = {ARRIVAL_1: "arrival", ARRIVAL_2: "arrival", SERVICE_1: "delivery", SERVICE_2: "delivery"}
EVENT_USER = {ARRIVAL_1: 1, ARRIVAL_2: 2, SERVICE_1: 1, SERVICE_2: 2}

# 상태 번호는 사용자 1 관점 차트와 같다
#   NOMA: 0 유휴, 1 사용자1 단독, 2 동시, 3 사용자2 단독
#   OMA : 0 유휴, 1 사용자1 서비스, 2 사용자2 서비스, 3 사용자2 서비스+사용자1 대기, 4 사용자1 서비스+사용자2 대기
NOMA_NEXT_STATE: Dict[Tuple[int, int], int] = {
    (0, ARRIVAL_1): 1, (0, ARRIVAL_2): 3,
    (1, ARRIVAL_1): 1, (1, ARRIVAL_2): 2, (1, SERVICE_1): 0,
    (2, ARRIVAL_1): 2, (2, ARRIVAL_2): 2, (2, SERVICE_1): 3, (2, SERVICE_2): 1,
    (3, ARRIVAL_1): 2, (3, ARRIVAL_2): 3, (3, SERVICE_2): 0,
}
OMA_NEXT_STATE: Dict[Tuple[int, int], int] = {
    (0, ARRIVAL_1): 1, (0, ARRIVAL_2): 2,
    (1, ARRIVAL_1): 1, (1, ARRIVAL_2): 4, (1, SERVICE_1): 0,
    (2, ARRIVAL_1): 3, (2, ARRIVAL_2): 2, (2, SERVICE_2): 0,
    (3, ARRIVAL_1): 3, (3, ARRIVAL_2): 3, (3, SERVICE_2): 1,
    (4, ARRIVAL_1): 4, (4, ARRIVAL_2): 4, (4, SERVICE_1): 2,
}

# 상태별 패킷 보유 / 서비스 중 여부 (불변식 검사용)
NOMA_HAS_PACKET = {0: (False, False), 1: (True, False), 2: (True, True), 3: (False, True)}
OMA_HAS_PACKET = {0: (False, False), 1: (True, False), 2: (False, True), 3: (True, True), 4: (True, True)}
OMA_IN_SERVICE = {1: 0, 2: 1, 3: 1, 4: 0}


def integrate_age_segment(age_at_start: float, dt: float) -> float:
    """단위 기울기 AoI 의 구간 적분: age·dt + dt²/2"""
    if dt < 0:
        raise ValueError(f"dt must be nonnegative, got {dt}")
    return age_at_start * dt + 0.5 * dt * dt


def _state_clocks(params: SystemParams, scheme: str) -> Dict[int, List[Tuple[int, float]]]:
    """상태별 활성 지수 시계 목록 [(사건, 전송률)]"""
    l1, l2, m1, m2 = params.lambda1, params.lambda2, params.mu1, params.mu2
    arrivals = [(ARRIVAL_1, l1), (ARRIVAL_2, l2)]
    if scheme == "noma":
        m1p, m2p = params.mu1p, params.mu2p
        return {
            0: arrivals,
            1: arrivals + [(SERVICE_1, m1)],
            2: arrivals + [(SERVICE_1, m1p), (SERVICE_2, m2p)],
            3: arrivals + [(SERVICE_2, m2)],
        }
    if scheme == "oma":
        return {
            0: arrivals,
            1: arrivals + [(SERVICE_1, m1)],
            2: arrivals + [(SERVICE_2, m2)],
            3: arrivals + [(SERVICE_2, m2)],
            4: arrivals + [(SERVICE_1, m1)],
        }
    raise ValueError(f"unknown scheme: {scheme}")


def batch_means_interval(batch_values: np.ndarray, level: float = CI_LEVEL) -> Tuple[float, float]:
    """배치 평균들의 (표준오차, Student-t 신뢰구간 반폭)"""
    n = batch_values.size
    if n < 2:
        return float("nan"), float("nan")
    std_error = float(np.std(batch_values, ddof=1) / np.sqrt(n))
    tcrit = float(student_t.ppf(1.0 - (1.0 - level) / 2.0, df=n - 1))
    return std_error, tcrit * std_error


class StatusUpdateSimulator:
    """
    한 번의 시뮬레이션 실행이 소유하는 모든 상태.
    실행 도중에는 공유하지 않는다 (단일 논리 시계).
    """

    def __init__(self, params: SystemParams, config: SimConfig):
        self.params = params
        self.config = config
        self.scheme = config.scheme
        self.next_state = NOMA_NEXT_STATE if self.scheme == "noma" else OMA_NEXT_STATE
        self.has_packet = NOMA_HAS_PACKET if self.scheme == "noma" else OMA_HAS_PACKET
        self.n_states = 4 if self.scheme == "noma" else 5

        # 상태별 (사건 목록, 누적 전송률, 총 전송률)
        self._clock_table = {}
        for state, clocks in _state_clocks(params, self.scheme).items():
            events = [e for e, _ in clocks]
            cumulative = np.cumsum([r for _, r in clocks]).tolist()
            self._clock_table[state] = (events, cumulative, cumulative[-1])

        self.rng = np.random.Generator(np.random.PCG64(config.seed))
        self._exp_block: List[float] = []
        self._uni_block: List[float] = []
        self._cursor = 0

        # 물리 상태
        self.clock = 0.0
        self.state = 0
        self.packets: List[Optional[PacketRecord]] = [None, None]   # 사용자별 대기/서비스 중 패킷
        self.delivered = [0.0, 0.0]    # 모니터가 마지막으로 받은 패킷 생성 시각 U_k

        self._trace_rows: List[dict] = []

    # ----- 난수 -----

    def _refill(self) -> None:
        self._exp_block = self.rng.standard_exponential(RNG_BLOCK_SIZE).tolist()
        self._uni_block = self.rng.random(RNG_BLOCK_SIZE).tolist()
        self._cursor = 0

    # ----- 실행 -----

    def run(self) -> SimResult:
        cfg = self.config
        total_events = cfg.max_events
        warmup_events = int(cfg.warmup_fraction * total_events)
        measured = total_events - warmup_events
        batch_size = max(1, measured // cfg.batches)

        # 루프 안에서는 파이썬 float 로 누적
        area = [[0.0, 0.0] for _ in range(cfg.batches)]
        duration = [0.0] * cfg.batches
        occupancy = [0.0] * self.n_states

        clock_table = self._clock_table
        next_state = self.next_state
        delivered = self.delivered
        check = cfg.check_invariants
        tracing = cfg.trace_path is not None and cfg.trace_limit > 0

        for n in range(total_events):
            if self._cursor >= len(self._exp_block):
                self._refill()
            events, cumulative, total_rate = clock_table[self.state]
            dt = self._exp_block[self._cursor] / total_rate
            pick = self._uni_block[self._cursor] * total_rate
            self._cursor += 1

            k = 0
            while k < len(cumulative) - 1 and pick >= cumulative[k]:
                k += 1
            event = events[k]

            now = self.clock + dt
            if n >= warmup_events:
                b = min((n - warmup_events) // batch_size, cfg.batches - 1)
                age1 = self.clock - delivered[0]
                age2 = self.clock - delivered[1]
                area[b][0] += integrate_age_segment(age1, dt)
                area[b][1] += integrate_age_segment(age2, dt)
                duration[b] += dt
                occupancy[self.state] += dt

            state_before = self.state
            self.clock = now
            self.state = next_state[(state_before, event)]

            if event == ARRIVAL_1 or event == ARRIVAL_2:
                self.packets[0 if event == ARRIVAL_1 else 1] = PacketRecord(now)
            else:
                user = 0 if event == SERVICE_1 else 1
                if check:
                    self._check_delivery(user, now)
                delivered[user] = self.packets[user].generation_time
                self.packets[user] = None

            if check:
                self._check_state()
            if tracing and len(self._trace_rows) < cfg.trace_limit:
                self._trace_rows.append({
                    "time": now,
                    "event": EVENT_NAMES[event],
                    "user": EVENT_USER[event],
                    "state_before": state_before,
                    "state_after": self.state,
                    "age1": now - delivered[0],
                    "age2": now - delivered[1],
                })

        return self._summarize(np.array(area), np.array(duration), np.array(occupancy), total_events)

    def _summarize(self, area: np.ndarray, duration: np.ndarray,
                   occupancy: np.ndarray, events: int) -> SimResult:
        sim_time = float(duration.sum())
        ages = area.sum(axis=0) / sim_time
        batch_ages = area / duration[:, None]
        se1, hw1 = batch_means_interval(batch_ages[:, 0])
        se2, hw2 = batch_means_interval(batch_ages[:, 1])

        logger.debug(f"[SIM] batch means user1={np.round(batch_ages[:, 0], 4).tolist()}")
        logger.debug(f"[SIM] batch means user2={np.round(batch_ages[:, 1], 4).tolist()}")

        if self.config.trace_path is not None:
            self.write_trace(self.config.trace_path)

        return SimResult(
            scheme=self.scheme,
            age_user1=float(ages[0]),
            age_user2=float(ages[1]),
            age_total=float(ages[0] + ages[1]),
            ci_half_width_user1=hw1,
            ci_half_width_user2=hw2,
            std_error_user1=se1,
            std_error_user2=se2,
            events_processed=events,
            sim_time=sim_time,
            seed=self.config.seed,
            state_occupancy=(occupancy / sim_time).tolist(),
        )

    # ----- 불변식 -----

    def _check_delivery(self, user: int, now: float) -> None:
        packet = self.packets[user]
        if packet is None:
            raise SimulationInvariantError(f"user {user + 1} delivered without a packet at t={now}")
        packet_age = now - packet.generation_time
        monitor_age = now - self.delivered[user]
        if packet_age <= 0.0:
            raise SimulationInvariantError(f"nonpositive packet age {packet_age} at t={now}")
        if packet_age > monitor_age:
            raise SimulationInvariantError(
                f"delivery raised the age of user {user + 1}: {monitor_age} -> {packet_age}"
            )

    def _check_state(self) -> None:
        # 상태 번호가 말하는 패킷 보유 여부와 실제 패킷이 일치해야 한다
        # (OMA 상호 배제, NOMA 동시 서비스가 여기서 같이 검사된다)
        holding = tuple(p is not None for p in self.packets)
        if holding != self.has_packet[self.state]:
            raise SimulationInvariantError(
                f"state {self.state} expects packets {self.has_packet[self.state]}, found {holding}"
            )
        if self.scheme == "oma" and self.state != 0 and not holding[OMA_IN_SERVICE[self.state]]:
            raise SimulationInvariantError(f"OMA serves an empty user in state {self.state}")
        for user in (0, 1):
            if self.delivered[user] > self.clock:
                raise SimulationInvariantError("monitor timestamp is in the future")
            packet = self.packets[user]
            if packet is not None and packet.generation_time > self.clock:
                raise SimulationInvariantError("packet generated in the future")

    # ----- 추적 -----

    def write_trace(self, path: str | Path) -> None:
        columns = ["time", "event", "user", "state_before", "state_after", "age1", "age2"]
        frame = pd.DataFrame(self._trace_rows, columns=columns)
        frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
        logger.info(f"[SAVE] event trace: {path} ({len(frame)} rows)")


def simulate(params: SystemParams, config: SimConfig) -> SimResult:
    """시뮬레이션 1회 실행. (params, config) 가 같으면 결과도 비트 단위로 같다."""
    logger.debug(f"[SIM] {config.scheme} seed={config.seed} events={config.max_events}")
    return StatusUpdateSimulator(params, config).run()
