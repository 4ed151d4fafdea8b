import json
import xml.etree.ElementTree as ET

import pandas as pd
import pytest

from app import main
from config.settings import EXIT_INFEASIBLE, EXIT_OK, EXIT_USAGE


def _run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


# ===== analyze =====

def test_analyze_all_ones(capsys, samples):
    code, out = _run(capsys, "analyze", "--config", str(samples / "noma_all_ones.json"), "-q")
    assert code == EXIT_OK
    result = json.loads(out)
    by_scheme = {r["scheme"]: r for r in result["results"]}
    assert by_scheme["noma"]["engine"]["age_user1"] == pytest.approx(2.525253, abs=1e-5)
    assert by_scheme["oma"]["engine"]["age_user1"] == pytest.approx(2.433333, abs=1e-5)
    for entry in result["results"]:
        assert entry["agreement_delta"] < 1e-10
    assert [c["name"] for c in result["constraints"]] == ["solo_rate_user1", "solo_rate_user2", "sum_rate"]


def test_analyze_single_scheme_with_csv(capsys, samples, tmp_path):
    path = tmp_path / "analyze.csv"
    code, out = _run(capsys, "analyze", "--config", str(samples / "noma_all_ones.json"),
                     "--scheme", "oma", "--csv", str(path), "-q")
    assert code == EXIT_OK
    assert [r["scheme"] for r in json.loads(out)["results"]] == ["oma"]
    frame = pd.read_csv(path)
    assert sorted(frame["method"]) == ["engine", "theorem-matrices"]


def test_analyze_diagnostics(capsys, samples):
    code, out = _run(capsys, "analyze", "--config", str(samples / "noma_all_ones.json"), "--diagnostics", "-q")
    assert code == EXIT_OK
    diagnostics = json.loads(out)["diagnostics"]
    assert diagnostics["charts"]["noma/user1"]["balance_residual"] < 1e-12
    assert diagnostics["charts"]["oma/joint"]["average_total_age"] == pytest.approx(4.866667, abs=1e-5)
    corrections = diagnostics["noma_matrix_corrections"]
    assert [(e["row"], e["col"]) for e in corrections] == [(1, 1), (5, 5)]


@pytest.mark.parametrize("sample, expected", [
    ("infeasible.json", EXIT_INFEASIBLE),
    ("malformed.json", EXIT_USAGE),
    ("negative_rate.json", EXIT_USAGE),
    ("does_not_exist.json", EXIT_USAGE),
])
def test_analyze_exit_codes(capsys, samples, sample, expected):
    code, out = _run(capsys, "analyze", "--config", str(samples / sample), "-q")
    assert code == expected
    assert out == ""


def test_allow_infeasible(capsys, samples):
    code, out = _run(capsys, "analyze", "--config", str(samples / "infeasible.json"),
                     "--allow-infeasible", "-q")
    assert code == EXIT_OK
    assert len(json.loads(out)["results"]) == 2


def test_oma_only_skips_noma_constraints(capsys, samples):
    code, _ = _run(capsys, "analyze", "--config", str(samples / "infeasible.json"), "--scheme", "oma", "-q")
    assert code == EXIT_OK


def test_tagged_logs_go_to_stderr(capsys, samples):
    assert main(["analyze", "--config", str(samples / "noma_all_ones.json")]) == EXIT_OK
    captured = capsys.readouterr()
    assert "[OK] analyze finished" in captured.err
    assert "[OK]" not in captured.out

    assert main(["analyze", "--config", str(samples / "infeasible.json")]) == EXIT_INFEASIBLE
    captured = capsys.readouterr()
    assert "[ERROR] infeasible parameters" in captured.err
    assert captured.out == ""


# ===== compare =====

def test_compare_oma_wins_below_crossover(capsys, samples):
    code, out = _run(capsys, "compare", "--config", str(samples / "saturated_alpha.json"), "-q")
    assert code == EXIT_OK
    result = json.loads(out)
    assert result["winner"] == "OMA"
    assert result["limit_winner"] == "OMA"
    assert result["crossover_alpha"] == pytest.approx(9.0 / 7.0, abs=1e-6)
    assert result["oma_limit_total"] == pytest.approx(7.0 / 3.0)
    assert result["noma_limit_total"] == pytest.approx(2.5)


def test_compare_noma_wins_above_crossover(capsys, samples):
    code, out = _run(capsys, "compare", "--config", str(samples / "saturated_alpha_high.json"), "-q")
    assert code == EXIT_OK
    assert json.loads(out)["winner"] == "NOMA"


def test_compare_symmetric_limit_tie(capsys, samples):
    code, out = _run(capsys, "compare", "--config", str(samples / "symmetric_alpha.json"), "-q")
    assert code == EXIT_OK
    result = json.loads(out)
    assert result["limit_winner"] == "tie"
    assert result["crossover_alpha"] == pytest.approx(4.0 / 3.0, abs=1e-6)


def test_compare_lambda_override(capsys, samples):
    code, out = _run(capsys, "compare", "--config", str(samples / "low_rate_alpha.json"),
                     "--lambda", "0.001", "-q")
    assert code == EXIT_OK
    result = json.loads(out)
    assert result["lambda1"] == result["lambda2"] == 0.001
    assert result["oma_total"] == pytest.approx(result["noma_total"], rel=1e-3)


def test_compare_explicit_mode_has_no_crossover(capsys, samples):
    code, out = _run(capsys, "compare", "--config", str(samples / "noma_all_ones.json"), "-q")
    assert code == EXIT_OK
    assert json.loads(out)["crossover_alpha"] is None


# ===== simulate =====

def test_simulate_is_deterministic(capsys, samples):
    argv = ["simulate", "--config", str(samples / "noma_all_ones.json"),
            "--events", "5000", "--batches", "10", "--seed", "7", "--check", "-q"]
    code1, out1 = _run(capsys, *argv)
    code2, out2 = _run(capsys, *argv)
    assert code1 == code2 == EXIT_OK
    assert out1 == out2
    result = json.loads(out1)
    assert set(result) == {"noma", "oma"}
    assert result["noma"]["simulation"]["seed"] == 7
    assert "z_user1" in result["noma"]["check"]


def test_simulate_rejects_tiny_budget(capsys, samples):
    code, out = _run(capsys, "simulate", "--config", str(samples / "noma_all_ones.json"),
                     "--events", "100", "--batches", "20", "-q")
    assert code == EXIT_USAGE
    assert out == ""


def test_simulate_trace_per_scheme(capsys, samples, tmp_path):
    trace = tmp_path / "trace.csv"
    code, _ = _run(capsys, "simulate", "--config", str(samples / "noma_all_ones.json"),
                   "--events", "2000", "--batches", "10", "--trace", str(trace),
                   "--trace-limit", "20", "--check-invariants", "-q")
    assert code == EXIT_OK
    for scheme in ("noma", "oma"):
        assert len(pd.read_csv(tmp_path / f"trace_{scheme}.csv")) == 20


# ===== sweep =====

def test_sweep_writes_csv_to_stdout(capsys, samples):
    code, out = _run(capsys, "sweep", "--config", str(samples / "saturated_alpha.json"),
                     "--param", "alpha", "--steps", "11", "-q")
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "value,oma_total,noma_total,oma_user1,oma_user2,noma_user1,noma_user2,winner"
    assert len(lines) == 12


def test_sweep_outputs(capsys, samples, tmp_path):
    csv_path, svg_path, xlsx_path = tmp_path / "s.csv", tmp_path / "s.svg", tmp_path / "s.xlsx"
    code, out = _run(capsys, "sweep", "--config", str(samples / "low_rate_alpha.json"),
                     "--param", "lambda", "--from", "0.001", "--to", "10", "--steps", "9",
                     "--csv", str(csv_path), "--svg", str(svg_path), "--xlsx", str(xlsx_path), "-q")
    assert code == EXIT_OK
    assert out == ""
    assert len(pd.read_csv(csv_path)) == 9
    root = ET.parse(svg_path).getroot()
    series = [g.get("id") for g in root.iter("{http://www.w3.org/2000/svg}g")
              if (g.get("id") or "").startswith("series-")]
    assert series == ["series-oma", "series-noma"]
    assert xlsx_path.exists()


def test_sweep_bad_range(capsys, samples):
    code, _ = _run(capsys, "sweep", "--config", str(samples / "saturated_alpha.json"),
                   "--param", "alpha", "--from", "0.5", "--to", "1.5", "-q")
    assert code == EXIT_USAGE


# ===== chart =====

def test_chart_command(capsys, samples, tmp_path):
    code, out = _run(capsys, "chart", "--config", str(samples / "noma_all_ones.json"), "--scheme", "oma", "-q")
    assert code == EXIT_OK
    chart = json.loads(out)
    assert len(chart["transitions"]) == 11

    path = tmp_path / "joint.json"
    code, out = _run(capsys, "chart", "--config", str(samples / "noma_all_ones.json"),
                     "--scheme", "noma", "--perspective", "joint", "--out", str(path), "-q")
    assert code == EXIT_OK
    assert out == ""
    assert json.loads(path.read_text(encoding="utf-8"))["age_dim"] == 4


def test_missing_subcommand_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2
