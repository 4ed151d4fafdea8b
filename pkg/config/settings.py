"""
분석 엔진 / 시뮬레이터 / CLI 공통 설정값
"""

# ===== SHS 엔진 허용 오차 =====

BALANCE_TOL = 1e-12        # 정상분포 균형방정식 잔차 (max-norm)
CORRELATION_TOL = 1e-10    # 상관벡터 방정식 잔차, (1 + ||v||∞) 배율
CLAMP_TOL = 1e-12          # 이 범위 안의 음수는 0으로 보정
MAX_CONDITION = 1e12       # 조건수가 이보다 크면 특이 시스템으로 판정

# ===== 비교 / 교차점 =====

TIE_EPS = 1e-9             # 두 총 AoI 차이가 이 이하면 무승부
CROSSOVER_XTOL = 1e-9      # α* 이분법 허용 오차
ALPHA_RANGE = (1.0, 2.0)   # 스펙트럼 효율 배율 α 구간
DEFAULT_DELTA = 0.5

# λ→∞ 근사: λ1 = λ2 = LIMIT_LAMBDA_FACTOR · max(μ1, μ2)
LIMIT_LAMBDA_FACTOR = 1e4

# λ 스윕 기본 범위 (로그 스케일)
LAMBDA_SWEEP_RANGE = (1e-3, 10.0)

# ===== 시뮬레이터 =====

DEFAULT_EVENTS = 1_000_000
DEFAULT_SEED = 0
DEFAULT_WARMUP_FRACTION = 0.05
DEFAULT_BATCHES = 20
CI_LEVEL = 0.95
RNG_BLOCK_SIZE = 65_536    # 난수 블록 크기 (재현성 계약의 일부)
TRACE_ROW_LIMIT = 100_000

# ===== 출력 포맷 =====

SIG_DIGITS = 12
CSV_FLOAT_FORMAT = f"%.{SIG_DIGITS}g"
SVG_FIGSIZE = (6.4, 4.0)     # inch
SVG_HASHSALT = "noma-aoi"    # matplotlib SVG id 고정 (바이트 단위 재현)

# ===== CLI 종료 코드 =====

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERICAL = 4
