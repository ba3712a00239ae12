import numpy as np
import pytest
from scipy.integrate import quad

from tvwold.exceptions import DomainError
from tvwold.kernels import KERNEL_NAMES, check_bandwidth, get_kernel


@pytest.mark.parametrize("name", KERNEL_NAMES)
def test_integrates_to_one(name):
    k = get_kernel(name)
    val, _ = quad(lambda z: float(k(np.array([z]))[0]), -k.support, k.support,
                  limit=200)
    assert abs(val - 1.0) < 1e-6


@pytest.mark.parametrize("name", KERNEL_NAMES)
def test_symmetric_and_nonnegative(name):
    k = get_kernel(name)
    z = np.linspace(-k.support, k.support, 501)
    np.testing.assert_allclose(k(z), k(-z))
    assert (k(z) >= 0).all()


@pytest.mark.parametrize("name", KERNEL_NAMES)
def test_vanishes_outside_support(name):
    k = get_kernel(name)
    z = np.array([-k.support - 1e-9, k.support + 1e-9, 2 * k.support])
    np.testing.assert_array_equal(k(z), 0.0)


def test_epanechnikov_values():
    k = get_kernel("epanechnikov")
    np.testing.assert_allclose(k(np.array([0.0])), [0.75])
    np.testing.assert_allclose(k(np.array([0.5])), [0.75 * 0.75])


def test_bandwidth_scaling():
    k = get_kernel("uniform")
    w = k.weights(np.array([0.0, 0.19, 0.21]), 0.2)
    np.testing.assert_allclose(w, [2.5, 2.5, 0.0])


def test_unknown_kernel():
    with pytest.raises(DomainError, match="unknown kernel"):
        get_kernel("triweight")


@pytest.mark.parametrize("b", [0.0, -0.1, 1.5])
def test_bad_bandwidth(b):
    with pytest.raises(DomainError, match="bandwidth"):
        check_bandwidth(b)


def test_good_bandwidth():
    assert check_bandwidth(0.3) == 0.3
    assert check_bandwidth(1.0) == 1.0
