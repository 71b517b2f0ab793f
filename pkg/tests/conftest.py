import numpy as np
import pytest

from hjb_pi import build_benchmark


@pytest.fixture(scope="session")
def lq_paper():
    """1D benchmark at the reported parameters (L=3, h=0.03)."""
    return build_benchmark("lq1d")


@pytest.fixture(scope="session")
def lq_coarse():
    return build_benchmark("lq1d", h=0.2)


@pytest.fixture(scope="session")
def lq_mid():
    return build_benchmark("lq1d", h=0.1)


@pytest.fixture(scope="session")
def man_paper():
    """2D benchmark at the reported parameters (L=2, h=0.05)."""
    return build_benchmark("manufactured2d")


@pytest.fixture(scope="session")
def man_coarse():
    return build_benchmark("manufactured2d", h=0.2)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)
