"""
결과 출력: 스윕 표 CSV / 엑셀 통합문서 / 2-계열 SVG 선 그래프

- CSV  : pandas, 유효숫자 12자리, "\n" 줄바꿈 (입력이 같으면 바이트 단위로 같다)
- XLSX : openpyxl, 'sweep' 시트(헤더 고정) + 'params' 시트(기준 설정)
- SVG  : matplotlib (Agg), 선 계열 2개(OMA, NOMA) + 교차점 마커(있을 때만)
"""

import io
from pathlib import Path
from typing import List, Optional, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import openpyxl
import pandas as pd
from openpyxl.styles import Font

from config.settings import CSV_FLOAT_FORMAT, SVG_FIGSIZE, SVG_HASHSALT
from modules.system_params import SystemParams
from modules.utils import logger, round_sig

SERIES_COLORS = {"oma": "#1f77b4", "noma": "#d62728"}
Y_LABELS = {"total": "average age (total)", "user1": "average age (user 1)", "user2": "average age (user 2)"}


# ===== CSV =====

def format_csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")


def write_csv(frame: pd.DataFrame, path: str | Path) -> str:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(format_csv(frame))
    logger.info(f"[SAVE] CSV 저장 완료: {path} (rows={len(frame)})")
    return str(path)


# ===== XLSX =====

def write_xlsx(frame: pd.DataFrame, params: SystemParams, path: str | Path,
               sheet_name: str = "sweep") -> str:
    """
    스윕 표를 새 통합문서에 기록한다.
    - sweep 시트: 1행 = 헤더(굵게, 고정), 이후 격자 순서대로
    - params 시트: 기준 설정 (key, value)
    """
    wb = openpyxl.Workbook()
    ws = wb.active
    ws.title = sheet_name

    ws.append(list(frame.columns))
    for cell in ws[1]:
        cell.font = Font(bold=True)
    for row in frame.itertuples(index=False, name=None):
        ws.append([round_sig(v) if isinstance(v, float) else v for v in row])
    ws.freeze_panes = "A2"

    ws_params = wb.create_sheet(title="params")
    ws_params.append(["key", "value"])
    ws_params["A1"].font = Font(bold=True)
    ws_params["B1"].font = Font(bold=True)
    for key, value in _params_items(params):
        ws_params.append([key, value])

    wb.save(path)
    logger.info(f"[SAVE] '{sheet_name}' 저장 완료: {path} (rows={len(frame)})")
    return str(path)


def _params_items(params: SystemParams) -> List[Tuple[str, object]]:
    items = [
        ("lambda1", params.lambda1), ("lambda2", params.lambda2),
        ("mu1", params.mu1), ("mu2", params.mu2),
        ("noma.mode", params.noma.mode), ("noma.delta", params.noma.delta),
    ]
    if params.noma.mode == "alpha":
        items.append(("noma.alpha", params.noma.alpha))
    items += [("mu1p", round_sig(params.mu1p)), ("mu2p", round_sig(params.mu2p))]
    return items


# ===== SVG =====

def build_svg(frame: pd.DataFrame, variable: str, y: str = "total",
              log_x: bool = False, log_y: bool = False,
              crossover: Optional[Tuple[float, float]] = None) -> bytes:
    """
    OMA / NOMA 두 계열 선 그래프 (matplotlib, Agg).
    계열은 gid "series-oma" / "series-noma" 그룹, 교차점은 "crossover" 그룹으로 나온다.
    @param y: "total" | "user1" | "user2" (기본 total)
    @param crossover: (x, y) 가 주어지면 원 마커 추가 (y 가 total 일 때만 의미 있음)
    @returns: SVG 바이트 (입력이 같으면 같은 바이트)
    """
    if y not in Y_LABELS:
        raise ValueError(f"unknown y quantity: {y}")

    xs = frame["value"].astype(float).to_numpy()
    rc = {"svg.hashsalt": SVG_HASHSALT, "svg.fonttype": "none", "path.simplify": False}
    with matplotlib.rc_context(rc):
        fig, ax = plt.subplots(figsize=SVG_FIGSIZE)
        try:
            for name in ("oma", "noma"):
                ax.plot(xs, frame[f"{name}_{y}"].astype(float).to_numpy(),
                        color=SERIES_COLORS[name], linewidth=1.5,
                        label=name.upper(), gid=f"series-{name}")
            if crossover is not None:
                cx, cy = crossover
                ax.plot([cx], [cy], linestyle="none", marker="o", markersize=6,
                        fillstyle="none", color="black", gid="crossover")

            if log_x:
                ax.set_xscale("log")
            if log_y:
                ax.set_yscale("log")
            ax.set_xlabel("alpha" if variable == "alpha" else "arrival rate lambda")
            ax.set_ylabel(Y_LABELS[y])
            ax.spines["right"].set_visible(False)
            ax.spines["top"].set_visible(False)
            ax.legend(loc="best", frameon=False)
            fig.tight_layout()

            buf = io.BytesIO()
            fig.savefig(buf, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    return buf.getvalue()


def write_svg(svg: bytes, path: str | Path) -> str:
    with open(path, "wb") as f:
        f.write(svg)
    logger.info(f"[SAVE] SVG 저장 완료: {path}")
    return str(path)
