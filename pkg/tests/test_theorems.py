import numpy as np
import pytest

from conftest import make_params, random_params
from modules.charts import build_noma_chart, build_oma_chart, engine_age_report
from modules.shs_engine import correlation_system, stationary_distribution
from modules.theorems import (
    NOMA_REDUCED_UNKNOWNS,
    OMA_REDUCED_UNKNOWNS,
    reduced_engine_matrix,
    solve_theorem,
    solve_theorem2,
    solve_theorem3,
    theorem2_matrices,
    theorem2_typo_ledger,
    theorem3_matrices,
)


def test_noma_anchor(all_ones):
    report = solve_theorem2(all_ones)
    assert report.method == "theorem-matrices"
    assert report.age_user1 == pytest.approx(2.525253, abs=1e-5)
    assert report.age_user2 == pytest.approx(2.525253, abs=1e-5)
    assert report.age_total == pytest.approx(5.050505, abs=1e-5)


def test_oma_anchor(all_ones):
    report = solve_theorem3(all_ones)
    assert report.age_user1 == pytest.approx(2.433333, abs=1e-5)
    assert report.age_total == pytest.approx(4.866667, abs=1e-5)


@pytest.mark.parametrize("scheme", ["noma", "oma"])
def test_matrices_agree_with_engine(scheme, rng):
    for _ in range(100):
        params = random_params(rng)
        engine = engine_age_report(params, scheme)
        theorem = solve_theorem(params, scheme)
        assert theorem.age_user1 == pytest.approx(engine.age_user1, rel=1e-10)
        assert theorem.age_user2 == pytest.approx(engine.age_user2, rel=1e-10)


def test_symmetric_noma_params_give_equal_users():
    report = solve_theorem2(make_params(lambda1=2, lambda2=2, mu1=3, mu2=3, mu1p=1.2, mu2p=1.2))
    assert report.age_user1 == pytest.approx(report.age_user2, rel=1e-12)


def test_oma_rate_scaling():
    base = solve_theorem3(make_params())
    scaled = solve_theorem3(make_params().scaled(4.0))
    assert scaled.age_total == pytest.approx(base.age_total / 4.0, rel=1e-12)


def test_stationary_matrices_agree_with_engine(rng):
    params = random_params(rng)
    for system, chart in ((theorem2_matrices(params), build_noma_chart(params)),
                          (theorem3_matrices(params), build_oma_chart(params))):
        pi = np.linalg.solve(system.a1, system.c1)
        np.testing.assert_allclose(pi, stationary_distribution(chart).probabilities, rtol=1e-12, atol=1e-14)


def test_noma_correlation_matrix_is_reduced_engine_system(rng):
    for _ in range(10):
        params = random_params(rng)
        chart = build_noma_chart(params)
        full, _ = correlation_system(chart, stationary_distribution(chart))
        reduced = reduced_engine_matrix(full, 2, NOMA_REDUCED_UNKNOWNS)
        np.testing.assert_allclose(theorem2_matrices(params).a2, reduced, rtol=0, atol=1e-12)


def test_oma_correlation_matrix_is_reduced_engine_system(rng):
    for _ in range(10):
        params = random_params(rng)
        chart = build_oma_chart(params)
        full, _ = correlation_system(chart, stationary_distribution(chart))
        reduced = reduced_engine_matrix(full, 2, OMA_REDUCED_UNKNOWNS)
        np.testing.assert_allclose(theorem3_matrices(params).a2, reduced, rtol=0, atol=1e-12)


def test_printed_matrix_differs_in_exactly_two_entries():
    params = make_params(lambda1=1.0, lambda2=2.0, mu1=1.5, mu2=2.5, mu1p=0.7, mu2p=0.9)
    ledger = theorem2_typo_ledger(params)
    assert [(e.row, e.col) for e in ledger] == [(1, 1), (5, 5)]
    idle, v21 = ledger
    assert (idle.printed, idle.corrected) == (2.0, 3.0)
    assert idle.corrected == pytest.approx(1.0 + 2.0)
    assert v21.printed == pytest.approx(0.7 + 0.9)
    assert v21.corrected == pytest.approx(1.0 + 0.7 + 0.9)


def test_printed_matrix_matches_engine_elsewhere():
    params = make_params(lambda1=1.0, lambda2=2.0, mu1=1.5, mu2=2.5, mu1p=0.7, mu2p=0.9)
    chart = build_noma_chart(params)
    full, _ = correlation_system(chart, stationary_distribution(chart))
    reduced = reduced_engine_matrix(full, 2, NOMA_REDUCED_UNKNOWNS)
    printed = theorem2_matrices(params, verbatim=True).a2
    differs = ~np.isclose(printed, reduced, rtol=0, atol=1e-12)
    assert sorted(zip(*np.nonzero(differs))) == [(0, 0), (4, 4)]


def test_printed_matrix_gives_a_different_age():
    params = make_params(lambda1=1.0, lambda2=2.0, mu1=1.5, mu2=2.5, mu1p=0.7, mu2p=0.9)
    corrected = solve_theorem2(params)
    printed = solve_theorem2(params, verbatim=True)
    assert printed.age_user1 != pytest.approx(corrected.age_user1, rel=1e-6)


def test_unknown_scheme(all_ones):
    with pytest.raises(ValueError):
        solve_theorem(all_ones, "cdma")
