import numpy as np
import pytest

from tvwold.kernels import get_kernel


@pytest.fixture
def epanechnikov():
    return get_kernel("epanechnikov")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def stable_ar1_series(phi, T, seed=0, intercept=0.0, sd=1.0):
    """Constant-coefficient AR(1) sample with a 100-draw burn-in."""
    g = np.random.default_rng(seed)
    e = sd * g.standard_normal(T + 100)
    x = np.zeros(T + 100)
    for t in range(1, T + 100):
        x[t] = intercept + phi * x[t - 1] + e[t]
    return x[100:]
