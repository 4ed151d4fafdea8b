"""
NOMA / OMA 2-사용자 상태 업데이트 시스템 평균 AoI 분석 CLI

    python app.py analyze  --config cfg.json [--scheme noma|oma|both] [--csv out.csv] [--diagnostics]
    python app.py sweep    --config cfg.json --param alpha|lambda [--from A --to B --steps N --log]
                           [--simulate --events N --seed S] [--csv out.csv --svg out.svg --xlsx out.xlsx]
    python app.py compare  --config cfg.json [--lambda L]
    python app.py simulate --config cfg.json [--scheme noma|oma|both] [--seed S --events N --check]
    python app.py chart    --config cfg.json --scheme noma|oma [--perspective 1|2|joint] [--out chart.json]

stdout 에는 결과(JSON / CSV)만, 로그는 stderr 로 나간다.
종료 코드: 0 성공, 2 설정/사용법 오류, 3 파라미터 제약 위반, 4 수치 실패
"""

import argparse
import json
import math
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import pandas as pd
from pydantic import ValidationError

from config.settings import (
    ALPHA_RANGE,
    DEFAULT_BATCHES,
    DEFAULT_EVENTS,
    DEFAULT_SEED,
    DEFAULT_WARMUP_FRACTION,
    EXIT_INFEASIBLE,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_USAGE,
    LAMBDA_SWEEP_RANGE,
    TRACE_ROW_LIMIT,
)
from modules.charts import build_chart, build_joint_chart, engine_age_report
from modules.comparison import (
    crossover_alpha,
    decide_winner,
    limit_age_report,
    noma_limit_total,
    oma_limit_total,
)
from modules.report_writer import build_svg, format_csv, write_csv, write_svg, write_xlsx
from modules.shs_engine import ChartValidationError, SingularSystemError, solve_chart
from modules.simulator import SimConfig, SimulationInvariantError, simulate
from modules.sweep import SimSettings, SweepSpec, find_crossover, run_sweep
from modules.system_params import (
    InfeasibleParamsError,
    SystemParams,
    check_noma_constraints,
    load_params,
    require_feasible,
)
from modules.theorems import solve_theorem, solve_theorem2, theorem2_typo_ledger
from modules.utils import dump_json, log_error, log_success, log_warning, logger, relative_gap, setup_logging

SCHEMES = ("noma", "oma")


# ============================================
# 공통
# ============================================

def _schemes(choice: str) -> List[str]:
    return list(SCHEMES) if choice == "both" else [choice]


def _load_checked(path: str, schemes: Sequence[str], allow_infeasible: bool) -> SystemParams:
    """
    설정을 읽고 NOMA 제약을 검사한다.
    단독 전송률 제약 위반은 --allow-infeasible 이 없으면 InfeasibleParamsError.
    """
    params = load_params(path)
    logger.info(f"[LOAD] {path}: lambda=({params.lambda1:g}, {params.lambda2:g}) "
                f"mu=({params.mu1:g}, {params.mu2:g}) mu'=({params.mu1p:g}, {params.mu2p:g}) [{params.derivation}]")
    if "noma" not in schemes:
        return params

    verdict = check_noma_constraints(params)
    for check in verdict.warnings:
        log_warning(check.message)
    if allow_infeasible:
        for check in verdict.violations:
            log_warning(f"{check.message} (allowed)")
        return params

    require_feasible(params)
    for check in verdict.violations:
        # 합 전송률 제약 위반은 경고로만 보고
        log_warning(check.message)
    return params


def _emit(text: str) -> None:
    sys.stdout.write(text)
    sys.stdout.flush()


def _positive_int(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not (value > 0 and math.isfinite(value)):
        raise argparse.ArgumentTypeError(f"must be a positive finite number, got {text}")
    return value


# ============================================
# analyze
# ============================================

def cmd_analyze(args: argparse.Namespace) -> int:
    schemes = _schemes(args.scheme)
    params = _load_checked(args.config, schemes, args.allow_infeasible)

    results = []
    flat_rows = []
    for scheme in schemes:
        engine = engine_age_report(params, scheme)
        theorem = solve_theorem(params, scheme)
        delta = max(relative_gap(engine.age_user1, theorem.age_user1),
                    relative_gap(engine.age_user2, theorem.age_user2))
        logger.info(f"[SOLVE] {scheme}: total={engine.age_total:.6f} "
                    f"(user1={engine.age_user1:.6f}, user2={engine.age_user2:.6f}), agreement={delta:.2e}")
        results.append({
            "scheme": scheme,
            "engine": engine.model_dump(mode="json", exclude={"params"}),
            "theorem_matrices": theorem.model_dump(mode="json", exclude={"params"}),
            "agreement_delta": delta,
        })
        flat_rows += [engine.flat(), theorem.flat()]

    output = {
        "params": params.model_dump(mode="json"),
        "mu1p": params.mu1p,
        "mu2p": params.mu2p,
        "constraints": [c.model_dump() for c in check_noma_constraints(params).checks],
        "results": results,
    }
    if args.diagnostics:
        output["diagnostics"] = _diagnostics(params, schemes)

    if args.csv:
        write_csv(pd.DataFrame(flat_rows), args.csv)

    _emit(dump_json(output))
    log_success("analyze finished")
    return EXIT_OK


def _diagnostics(params: SystemParams, schemes: Sequence[str]) -> dict:
    """차트별 잔차 / 정상분포, NOMA 행렬의 인쇄 형태 대비 수정 항목"""
    charts = {}
    for scheme in schemes:
        for perspective in (1, 2):
            solution = solve_chart(build_chart(params, scheme, perspective))
            charts[f"{scheme}/user{perspective}"] = {
                "stationary": solution.pi.probabilities.tolist(),
                "balance_residual": solution.balance_residual,
                "correlation_residual": solution.correlation_residual,
            }
        charts[f"{scheme}/joint"] = {
            "average_total_age": solve_chart(build_joint_chart(params, scheme)).average_age([0, 2]),
        }

    out: dict = {"charts": charts}
    if "noma" in schemes:
        out["noma_matrix_corrections"] = [entry._asdict() for entry in theorem2_typo_ledger(params)]
        try:
            verbatim = solve_theorem2(params, verbatim=True)
            out["noma_matrices_as_printed"] = verbatim.model_dump(mode="json", exclude={"params"})
        except (SingularSystemError, ValueError) as e:
            out["noma_matrices_as_printed"] = {"error": str(e)}
    return out


# ============================================
# sweep
# ============================================

def cmd_sweep(args: argparse.Namespace) -> int:
    # 제약은 run_sweep 이 격자점마다 검사한다
    params = load_params(args.config)

    default_range = ALPHA_RANGE if args.param == "alpha" else LAMBDA_SWEEP_RANGE
    scale = args.scale or ("log" if args.param == "lambda" else "linear")
    spec = SweepSpec(
        variable=args.param,
        start=args.start if args.start is not None else default_range[0],
        stop=args.stop if args.stop is not None else default_range[1],
        steps=args.steps,
        scale=scale,
        fixed=params,
        lam=args.lam,
    )

    sim = None
    if args.simulate:
        sim = SimSettings(events=args.events, base_seed=args.seed, batches=args.batches)
        # 격자점마다 SimConfig 가 만들어지기 전에 예산 오류를 먼저 잡는다
        SimConfig(scheme="noma", max_events=sim.events, batches=sim.batches)

    frame = run_sweep(spec, sim=sim, workers=args.workers,
                      allow_infeasible=args.allow_infeasible, progress=not args.quiet)

    if args.param == "alpha":
        alpha_star = crossover_alpha(params.mu1, params.mu2, params.delta)
        if alpha_star is None:
            logger.info("[SWEEP] no crossover alpha in [1, 2] for the saturated limit")
        else:
            logger.info(f"[SWEEP] saturated-limit crossover alpha* = {alpha_star:.9f}")

    if args.csv:
        write_csv(frame, args.csv)
    else:
        _emit(format_csv(frame))
    if args.xlsx:
        write_xlsx(frame, params, args.xlsx)
    if args.svg:
        log_x = spec.scale == "log"
        crossover = find_crossover(frame, log_x=log_x) if args.y == "total" else None
        svg = build_svg(frame, spec.variable, y=args.y, log_x=log_x, log_y=log_x, crossover=crossover)
        write_svg(svg, args.svg)

    log_success("sweep finished")
    return EXIT_OK


# ============================================
# compare
# ============================================

def cmd_compare(args: argparse.Namespace) -> int:
    params = _load_checked(args.config, SCHEMES, args.allow_infeasible)
    if args.lam is not None:
        params = params.with_lambda(args.lam)

    oma = engine_age_report(params, "oma")
    noma = engine_age_report(params, "noma")
    oma_limit = limit_age_report(params, "oma")
    noma_limit = limit_age_report(params, "noma")

    alpha_star = None
    if params.noma.mode == "alpha":
        alpha_star = crossover_alpha(params.mu1, params.mu2, params.delta)

    output = {
        "lambda1": params.lambda1,
        "lambda2": params.lambda2,
        "oma_total": oma.age_total,
        "noma_total": noma.age_total,
        "oma": oma.model_dump(mode="json", exclude={"params"}),
        "noma": noma.model_dump(mode="json", exclude={"params"}),
        "winner": decide_winner(oma.age_total, noma.age_total),
        "oma_limit_total": oma_limit_total(params.mu1, params.mu2),
        "noma_limit_total": noma_limit_total(params.mu1p, params.mu2p),
        "oma_limit": oma_limit.model_dump(mode="json", exclude={"params"}),
        "noma_limit": noma_limit.model_dump(mode="json", exclude={"params"}),
        "limit_winner": decide_winner(oma_limit.age_total, noma_limit.age_total),
        "crossover_alpha": alpha_star,
    }
    logger.info(f"[OK] winner={output['winner']} (OMA {oma.age_total:.6f} vs NOMA {noma.age_total:.6f}), "
                f"limit winner={output['limit_winner']}")
    _emit(dump_json(output))
    return EXIT_OK


# ============================================
# simulate
# ============================================

def cmd_simulate(args: argparse.Namespace) -> int:
    schemes = _schemes(args.scheme)
    params = _load_checked(args.config, schemes, args.allow_infeasible)

    output = {}
    for scheme in schemes:
        trace_path = None
        if args.trace:
            trace_path = args.trace
            if len(schemes) > 1:
                path = Path(args.trace)
                trace_path = str(path.with_name(f"{path.stem}_{scheme}{path.suffix}"))
        config = SimConfig(
            scheme=scheme,
            seed=args.seed,
            max_events=args.events,
            warmup_fraction=args.warmup,
            batches=args.batches,
            check_invariants=args.check_invariants,
            trace_path=trace_path,
            trace_limit=args.trace_limit,
        )
        result = simulate(params, config)
        logger.info(f"[SIM] {scheme}: user1={result.age_user1:.6f}±{result.ci_half_width_user1:.2g} "
                    f"user2={result.age_user2:.6f}±{result.ci_half_width_user2:.2g}")
        entry = {"simulation": result.model_dump(mode="json")}

        if args.check:
            analytic = engine_age_report(params, scheme)
            z1 = _z_score(result.age_user1, analytic.age_user1, result.std_error_user1)
            z2 = _z_score(result.age_user2, analytic.age_user2, result.std_error_user2)
            entry["check"] = {
                "analytical": analytic.model_dump(mode="json", exclude={"params"}),
                "z_user1": z1,
                "z_user2": z2,
            }
            for user, z in ((1, z1), (2, z2)):
                if z is not None and abs(z) > 3.0:
                    log_warning(f"{scheme} user {user}: |z| = {abs(z):.2f} > 3")
        output[scheme] = entry

    _emit(dump_json(output))
    log_success("simulate finished")
    return EXIT_OK


def _z_score(simulated: float, analytic: float, std_error: float) -> Optional[float]:
    if not std_error > 0:
        return None
    return (simulated - analytic) / std_error


# ============================================
# chart
# ============================================

def cmd_chart(args: argparse.Namespace) -> int:
    params = load_params(args.config)
    if args.perspective == "joint":
        chart = build_joint_chart(params, args.scheme)
    else:
        chart = build_chart(params, args.scheme, int(args.perspective))

    text = chart.model_dump_json(indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text)
        logger.info(f"[SAVE] chart: {args.out}")
    else:
        _emit(text)
    return EXIT_OK


# ============================================
# argparse
# ============================================

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="DEBUG 로그 (잔차, 배치 평균)")
    common.add_argument("-q", "--quiet", action="store_true", help="경고 이상만 출력, 진행 막대 끔")
    common.add_argument("--config", required=True, help="SystemParams JSON 파일")

    parser = argparse.ArgumentParser(prog="noma-aoi", description="NOMA/OMA average age of information")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="single-point analysis (engine + explicit matrices)")
    p.add_argument("--scheme", choices=["noma", "oma", "both"], default="both")
    p.add_argument("--csv")
    p.add_argument("--allow-infeasible", action="store_true")
    p.add_argument("--diagnostics", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", parents=[common], help="alpha or lambda sweep")
    p.add_argument("--param", choices=["alpha", "lambda"], required=True)
    p.add_argument("--from", dest="start", type=float)
    p.add_argument("--to", dest="stop", type=float)
    p.add_argument("--steps", type=int, default=101)
    p.add_argument("--log", dest="scale", action="store_const", const="log")
    p.add_argument("--linear", dest="scale", action="store_const", const="linear")
    p.add_argument("--lambda", dest="lam", type=_positive_float,
                   help="alpha 스윕의 lambda1 = lambda2 (기본: 1e4 * max(mu1, mu2))")
    p.add_argument("--simulate", action="store_true")
    p.add_argument("--events", type=_positive_int, default=DEFAULT_EVENTS)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--batches", type=_positive_int, default=DEFAULT_BATCHES)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--y", choices=["total", "user1", "user2"], default="total", help="SVG y 축 값")
    p.add_argument("--csv")
    p.add_argument("--svg")
    p.add_argument("--xlsx")
    p.add_argument("--allow-infeasible", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", parents=[common], help="NOMA vs OMA winner, limits and crossover alpha")
    p.add_argument("--lambda", dest="lam", type=_positive_float)
    p.add_argument("--allow-infeasible", action="store_true")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("simulate", parents=[common], help="discrete-event simulation")
    p.add_argument("--scheme", choices=["noma", "oma", "both"], default="both")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--events", type=_positive_int, default=DEFAULT_EVENTS)
    p.add_argument("--batches", type=_positive_int, default=DEFAULT_BATCHES)
    p.add_argument("--warmup", type=float, default=DEFAULT_WARMUP_FRACTION)
    p.add_argument("--check", action="store_true", help="엔진 값과 비교한 z-score 출력")
    p.add_argument("--check-invariants", action="store_true")
    p.add_argument("--trace")
    p.add_argument("--trace-limit", type=int, default=TRACE_ROW_LIMIT)
    p.add_argument("--allow-infeasible", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("chart", parents=[common], help="write an SHS chart as JSON")
    p.add_argument("--scheme", choices=["noma", "oma"], required=True)
    p.add_argument("--perspective", choices=["1", "2", "joint"], default="1")
    p.add_argument("--out")
    p.set_defaults(func=cmd_chart)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(verbose=args.verbose, quiet=args.quiet)

    try:
        return args.func(args)
    except InfeasibleParamsError as e:
        log_error(f"infeasible parameters: {e}")
        return EXIT_INFEASIBLE
    except (SingularSystemError, SimulationInvariantError) as e:
        log_error(f"numerical failure: {e}")
        return EXIT_NUMERICAL
    except ChartValidationError as e:
        log_error(f"invalid chart: {e}")
        return EXIT_USAGE
    except ValidationError as e:
        log_error(f"invalid configuration: {e.error_count()} error(s)\n{e}")
        return EXIT_USAGE
    except json.JSONDecodeError as e:
        log_error(f"malformed JSON: {e}")
        return EXIT_USAGE
    except (OSError, ValueError) as e:
        log_error(str(e))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
