from pathlib import Path

import numpy as np
import pytest

from modules.system_params import NomaConfig, SystemParams

SAMPLES = Path(__file__).parent / "test_samples"


def make_params(lambda1=1.0, lambda2=1.0, mu1=1.0, mu2=1.0, mu1p=0.5, mu2p=0.5, delta=0.5) -> SystemParams:
    return SystemParams(
        lambda1=lambda1, lambda2=lambda2, mu1=mu1, mu2=mu2,
        noma=NomaConfig(mode="explicit", delta=delta, mu1p=mu1p, mu2p=mu2p),
    )


def make_alpha_params(lam=1e4, mu1=1.0, mu2=2.0, alpha=1.2, delta=0.5) -> SystemParams:
    return SystemParams(
        lambda1=lam, lambda2=lam, mu1=mu1, mu2=mu2,
        noma=NomaConfig(mode="alpha", alpha=alpha, delta=delta),
    )


def random_params(rng: np.random.Generator) -> SystemParams:
    """단독 전송률 제약을 만족하는 임의 파라미터"""
    lam1, lam2, mu1, mu2 = rng.uniform(0.2, 5.0, size=4)
    f1, f2 = rng.uniform(0.2, 0.95, size=2)
    return make_params(lam1, lam2, mu1, mu2, f1 * mu1, f2 * mu2)


@pytest.fixture
def samples() -> Path:
    return SAMPLES


@pytest.fixture
def all_ones() -> SystemParams:
    """λ = μ = 1, μ' = 0.5"""
    return make_params()


@pytest.fixture
def saturated() -> SystemParams:
    """μ1 = 1, μ2 = 2, α = 1.2, δ = 0.5, λ = 1e4"""
    return make_alpha_params()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240917)
