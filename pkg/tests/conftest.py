import numpy as np
import pytest

from ionscope.hamiltonians import TrapParams


@pytest.fixture
def trap() -> TrapParams:
    return TrapParams(eta=0.5)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


def random_coeffs(rng: np.random.Generator, N: int) -> np.ndarray:
    v = rng.normal(size=N + 1) + 1j * rng.normal(size=N + 1)
    return v / np.linalg.norm(v)


@pytest.fixture
def make_coeffs(rng):
    return lambda N: random_coeffs(rng, N)
