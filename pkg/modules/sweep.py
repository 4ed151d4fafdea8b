"""
파라미터 스윕: α 스윕 (포화 영역, λ→∞ 대용값) / λ 스윕 (λ1 = λ2 = λ)

격자점마다 OMA, NOMA 평균 AoI 를 엔진으로 계산하고 승자를 판정한다.
--simulate 이면 격자점 i 에 seed = base_seed + i 로 시뮬레이션 열을 추가한다.
결과 행은 완료 순서와 관계없이 항상 격자 순서로 정렬된다.
"""

from concurrent.futures import ProcessPoolExecutor
from typing import List, Literal, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator
from tqdm import tqdm

from config.settings import ALPHA_RANGE, DEFAULT_BATCHES, DEFAULT_EVENTS, DEFAULT_SEED, LIMIT_LAMBDA_FACTOR
from modules.charts import engine_age_report
from modules.comparison import ComparisonRow
from modules.simulator import SimConfig, simulate
from modules.system_params import SystemParams, require_feasible
from modules.utils import logger

COMPARISON_COLUMNS = [
    "value", "oma_total", "noma_total",
    "oma_user1", "oma_user2", "noma_user1", "noma_user2", "winner",
]
SIM_COLUMNS = [
    "sim_oma_total", "sim_noma_total",
    "sim_oma_user1", "sim_oma_user2", "sim_noma_user1", "sim_noma_user2",
    "sim_oma_ci_user1", "sim_oma_ci_user2", "sim_noma_ci_user1", "sim_noma_ci_user2",
    "sim_seed",
]


# ===== 스윕 정의 =====

class SweepSpec(BaseModel):
    """
    variable : "alpha" 또는 "lambda"
    start/stop : JSON 에서는 "from"/"to" 로도 받는다
    lam : α 스윕에서 쓰는 λ1 = λ2 값 (없으면 LIMIT_LAMBDA_FACTOR · max(μ1, μ2))
    """
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    variable: Literal["alpha", "lambda"]
    start: float = Field(alias="from")
    stop: float = Field(alias="to")
    steps: int = Field(ge=2)
    scale: Literal["linear", "log"] = "linear"
    fixed: SystemParams
    lam: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _check_range(self):
        if not self.start < self.stop:
            raise ValueError(f"sweep needs from < to, got {self.start} >= {self.stop}")
        if self.variable == "alpha" and (self.start < ALPHA_RANGE[0] or self.stop > ALPHA_RANGE[1]):
            raise ValueError(f"alpha sweep must stay inside [{ALPHA_RANGE[0]}, {ALPHA_RANGE[1]}]")
        if self.scale == "log" and self.start <= 0:
            raise ValueError("log-scaled sweep needs a positive start value")
        return self

    @property
    def saturation_lambda(self) -> float:
        if self.lam is not None:
            return self.lam
        return LIMIT_LAMBDA_FACTOR * max(self.fixed.mu1, self.fixed.mu2)

    def grid(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.steps)
        return np.linspace(self.start, self.stop, self.steps)

    def point_params(self, value: float) -> SystemParams:
        if self.variable == "alpha":
            return self.fixed.with_alpha(float(value)).with_lambda(self.saturation_lambda)
        return self.fixed.with_lambda(float(value))


class SimSettings(BaseModel):
    """스윕 격자점마다 돌리는 시뮬레이션 설정"""
    model_config = ConfigDict(frozen=True)

    events: int = DEFAULT_EVENTS
    base_seed: int = DEFAULT_SEED
    batches: int = DEFAULT_BATCHES


# ===== 격자점 평가 =====

def evaluate_point(spec: SweepSpec, index: int, value: float,
                   sim: Optional[SimSettings] = None) -> dict:
    """격자점 하나. 프로세스 풀에서 pickle 되어 실행되므로 모듈 최상위 함수여야 한다."""
    params = spec.point_params(value)
    oma = engine_age_report(params, "oma")
    noma = engine_age_report(params, "noma")
    row = ComparisonRow.from_reports(float(value), oma, noma).model_dump()

    if sim is not None:
        seed = sim.base_seed + index
        results = {}
        for scheme in ("oma", "noma"):
            config = SimConfig(scheme=scheme, seed=seed, max_events=sim.events, batches=sim.batches)
            results[scheme] = simulate(params, config)
        for scheme, res in results.items():
            row[f"sim_{scheme}_total"] = res.age_total
            row[f"sim_{scheme}_user1"] = res.age_user1
            row[f"sim_{scheme}_user2"] = res.age_user2
            row[f"sim_{scheme}_ci_user1"] = res.ci_half_width_user1
            row[f"sim_{scheme}_ci_user2"] = res.ci_half_width_user2
        row["sim_seed"] = seed
    return row


def _evaluate_star(job: Tuple[SweepSpec, int, float, Optional[SimSettings]]) -> dict:
    return evaluate_point(*job)


def run_sweep(spec: SweepSpec,
              sim: Optional[SimSettings] = None,
              workers: int = 1,
              allow_infeasible: bool = False,
              progress: bool = True) -> pd.DataFrame:
    """
    스윕 실행.
    @param workers: 1 보다 크면 ProcessPoolExecutor 로 격자점을 병렬 평가
    @param allow_infeasible: False 이면 μ'_k > μ_k 인 격자점에서 InfeasibleParamsError
    @returns: COMPARISON_COLUMNS (+ SIM_COLUMNS) 순서의 DataFrame
    """
    grid = spec.grid()
    logger.info(f"[SWEEP] {spec.variable} {spec.start:g} -> {spec.stop:g}, {spec.steps} points ({spec.scale})")
    if spec.variable == "alpha":
        logger.info(f"[SWEEP] saturation proxy lambda1 = lambda2 = {spec.saturation_lambda:g}")

    if not allow_infeasible:
        for value in grid:
            verdict = require_feasible(spec.point_params(value))
            for warning in verdict.warnings:
                logger.debug(f"[WARN] {spec.variable}={value:g}: {warning.message}")

    jobs = [(spec, i, float(v), sim) for i, v in enumerate(grid)]
    desc = f"{spec.variable} sweep"
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows: List[dict] = list(tqdm(pool.map(_evaluate_star, jobs), total=len(jobs),
                                         desc=desc, disable=not progress))
    else:
        rows = [_evaluate_star(job) for job in tqdm(jobs, desc=desc, disable=not progress)]

    columns = COMPARISON_COLUMNS + (SIM_COLUMNS if sim is not None else [])
    frame = pd.DataFrame(rows)[columns]
    logger.info(f"[OK] sweep finished: {len(frame)} rows, winners {frame['winner'].value_counts().to_dict()}")
    return frame


# ===== 교차점 =====

def find_crossover(frame: pd.DataFrame, log_x: bool = False) -> Optional[Tuple[float, float]]:
    """
    noma_total - oma_total 의 부호가 처음 바뀌는 인접 격자점 사이를 선형 보간한 (x, y).
    log_x 이면 x 는 로그 축에서 보간한다. 교차가 없으면 None.
    """
    x = frame["value"].to_numpy(dtype=float)
    oma = frame["oma_total"].to_numpy(dtype=float)
    noma = frame["noma_total"].to_numpy(dtype=float)
    gap = noma - oma

    for i in range(len(x) - 1):
        if gap[i] == 0.0:
            return float(x[i]), float(oma[i])
        if gap[i] * gap[i + 1] < 0.0:
            t = gap[i] / (gap[i] - gap[i + 1])
            if log_x:
                xc = float(np.exp(np.log(x[i]) + t * (np.log(x[i + 1]) - np.log(x[i]))))
            else:
                xc = float(x[i] + t * (x[i + 1] - x[i]))
            yc = float(oma[i] + t * (oma[i + 1] - oma[i]))
            return xc, yc
    if len(x) > 0 and gap[-1] == 0.0:
        return float(x[-1]), float(oma[-1])
    return None
