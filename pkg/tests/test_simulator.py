import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

from conftest import make_params, random_params
from modules.charts import build_noma_chart, build_oma_chart, engine_age_report
from modules.shs_engine import stationary_distribution
from modules.simulator import (
    PacketRecord,
    SimConfig,
    StatusUpdateSimulator,
    batch_means_interval,
    integrate_age_segment,
    simulate,
)


# ===== integrate_age_segment =====

@pytest.mark.parametrize("age, dt, expected", [(0.0, 1.0, 0.5), (2.0, 0.0, 0.0), (1.0, 2.0, 4.0)])
def test_integrate_age_segment(age, dt, expected):
    assert integrate_age_segment(age, dt) == expected


def test_integrate_age_segment_rejects_negative_dt():
    with pytest.raises(ValueError):
        integrate_age_segment(1.0, -0.1)


# ===== SimConfig =====

def test_event_budget_must_cover_batches():
    with pytest.raises(ValidationError, match="10 \\* batches"):
        SimConfig(scheme="noma", max_events=100, batches=20)


def test_warmup_fraction_below_one():
    with pytest.raises(ValidationError):
        SimConfig(scheme="oma", warmup_fraction=1.0)


def test_seed_is_64_bit_unsigned():
    SimConfig(scheme="oma", seed=2**64 - 1)
    with pytest.raises(ValidationError):
        SimConfig(scheme="oma", seed=-1)
    with pytest.raises(ValidationError):
        SimConfig(scheme="oma", seed=2**64)


# ===== 배치 평균 =====

def test_batch_means_interval():
    values = np.array([1.0, 2.0, 3.0, 4.0])
    std_error, half_width = batch_means_interval(values)
    assert std_error == pytest.approx(np.std(values, ddof=1) / 2.0)
    # t_{0.975, 3} = 3.182446...
    assert half_width == pytest.approx(3.182446 * std_error, rel=1e-6)


# ===== simulate =====

def test_same_seed_same_result(all_ones):
    config = SimConfig(scheme="noma", seed=42, max_events=20_000)
    assert simulate(all_ones, config) == simulate(all_ones, config)


def test_different_seed_different_result(all_ones):
    a = simulate(all_ones, SimConfig(scheme="oma", seed=1, max_events=20_000))
    b = simulate(all_ones, SimConfig(scheme="oma", seed=2, max_events=20_000))
    assert a.age_user1 != b.age_user1


def test_result_fields(all_ones):
    result = simulate(all_ones, SimConfig(scheme="oma", seed=3, max_events=20_000, batches=10))
    assert result.scheme == "oma"
    assert result.events_processed == 20_000
    assert result.seed == 3
    assert result.age_total == pytest.approx(result.age_user1 + result.age_user2, rel=1e-12)
    assert result.ci_half_width_user1 > result.std_error_user1 > 0
    assert len(result.state_occupancy) == 5
    assert sum(result.state_occupancy) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("scheme", ["noma", "oma"])
def test_invariant_checks_pass(scheme, rng):
    params = random_params(rng)
    config = SimConfig(scheme=scheme, seed=7, max_events=50_000, check_invariants=True)
    unchecked = SimConfig(scheme=scheme, seed=7, max_events=50_000)
    # 검사는 결과를 바꾸지 않는다
    assert simulate(params, config) == simulate(params, unchecked)


@pytest.mark.parametrize("scheme, expected", [("noma", 2.525253), ("oma", 2.433333)])
def test_all_ones_agrees_with_analysis(scheme, expected, all_ones):
    result = simulate(all_ones, SimConfig(scheme=scheme, seed=11, max_events=400_000))
    assert result.age_user1 == pytest.approx(expected, rel=0.05)
    assert result.age_user2 == pytest.approx(expected, rel=0.05)


def test_single_user_limit():
    params = make_params(lambda1=1.0, lambda2=1e-9, mu1=1.0, mu2=1.0)
    result = simulate(params, SimConfig(scheme="oma", seed=5, max_events=400_000))
    assert result.age_user1 == pytest.approx(2.0, rel=0.05)


@pytest.mark.parametrize("scheme, build", [("noma", build_noma_chart), ("oma", build_oma_chart)])
def test_state_occupancy_matches_stationary_distribution(scheme, build):
    params = make_params(lambda1=0.7, lambda2=1.3, mu1=1.1, mu2=0.9, mu1p=0.6, mu2p=0.5)
    result = simulate(params, SimConfig(scheme=scheme, seed=9, max_events=400_000))
    pi = stationary_distribution(build(params)).probabilities
    np.testing.assert_allclose(result.state_occupancy, pi, atol=0.02)


def test_packet_record_is_immutable():
    packet = PacketRecord(1.5)
    with pytest.raises(AttributeError):
        packet.generation_time = 2.0


# ===== 추적 =====

def test_trace_is_capped(tmp_path, all_ones):
    path = tmp_path / "trace.csv"
    config = SimConfig(scheme="oma", seed=1, max_events=1_000, batches=10,
                       trace_path=str(path), trace_limit=50)
    simulate(all_ones, config)
    trace = pd.read_csv(path)
    assert list(trace.columns) == ["time", "event", "user", "state_before", "state_after", "age1", "age2"]
    assert len(trace) == 50
    assert trace["time"].is_monotonic_increasing
    assert set(trace["event"]) <= {"arrival", "delivery"}
    assert (trace[["age1", "age2"]] >= 0).all().all()


def test_trace_delivery_drops_age(tmp_path, all_ones):
    path = tmp_path / "trace.csv"
    config = SimConfig(scheme="noma", seed=2, max_events=2_000, batches=10,
                       trace_path=str(path), trace_limit=2_000)
    sim = StatusUpdateSimulator(all_ones, config)
    sim.run()
    trace = pd.read_csv(path)
    deliveries = trace[trace["event"] == "delivery"]
    assert len(deliveries) > 0
    # 전달 직후 해당 사용자의 AoI 는 패킷 나이 (양수)
    ages = np.where(deliveries["user"] == 1, deliveries["age1"], deliveries["age2"])
    assert (ages > 0).all()


# ===== 장시간 검증 =====

@pytest.mark.slow
@pytest.mark.parametrize("scheme", ["noma", "oma"])
def test_long_run_oracle_agreement(scheme):
    rng = np.random.default_rng(1234)
    for index in range(20):
        params = random_params(rng)
        analytic = engine_age_report(params, scheme)
        result = simulate(params, SimConfig(scheme=scheme, seed=index, max_events=10_000_000))
        for user in (1, 2):
            sim_age = getattr(result, f"age_user{user}")
            ref = getattr(analytic, f"age_user{user}")
            std_error = getattr(result, f"std_error_user{user}")
            assert abs(sim_age - ref) / ref < 0.02
            assert abs(sim_age - ref) < 3 * std_error


@pytest.mark.slow
@pytest.mark.parametrize("scheme, build", [("noma", build_noma_chart), ("oma", build_oma_chart)])
def test_long_run_occupancy(scheme, build, all_ones):
    result = simulate(all_ones, SimConfig(scheme=scheme, seed=42, max_events=10_000_000))
    pi = stationary_distribution(build(all_ones)).probabilities
    np.testing.assert_allclose(result.state_occupancy, pi, rtol=0.01)


@pytest.mark.slow
def test_long_run_all_ones_noma(all_ones):
    result = simulate(all_ones, SimConfig(scheme="noma", seed=42, max_events=10_000_000))
    assert result.age_user1 == pytest.approx(2.525253, rel=0.01)
