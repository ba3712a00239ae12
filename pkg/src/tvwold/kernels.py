"""Kernel weight functions for local linear estimation.

Every kernel is nonnegative, symmetric and integrates to one; the integral
is verified numerically at construction.  ``K_b(z) = K(z/b)/b`` rescales a
kernel to bandwidth ``b`` (in rescaled-time units, ``0 < b <= 1``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import norm

from .exceptions import DomainError

__all__ = ["Kernel", "get_kernel", "KERNEL_NAMES", "check_bandwidth"]

_GAUSS_CUTOFF = 4.0
_GAUSS_MASS = norm.cdf(_GAUSS_CUTOFF) - norm.cdf(-_GAUSS_CUTOFF)


@dataclass(frozen=True)
class Kernel:
    """A named kernel with compact support radius ``support``."""

    name: str
    support: float
    _func: Callable[[np.ndarray], np.ndarray]

    def __post_init__(self):
        z = np.linspace(-self.support, self.support, 20001)
        w = self._func(z)
        if np.any(w < 0):
            raise DomainError(f"kernel {self.name!r} takes negative values")
        if not np.allclose(w, self._func(-z)):
            raise DomainError(f"kernel {self.name!r} is not symmetric")
        integral = np.trapezoid(w, z)
        if abs(integral - 1.0) > 1e-6:
            raise DomainError(
                f"kernel {self.name!r} integrates to {integral:.8f}, not 1"
            )

    def __call__(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        out = np.where(np.abs(z) <= self.support, self._func(z), 0.0)
        return out

    def weights(self, z: np.ndarray, b: float) -> np.ndarray:
        """Bandwidth-scaled weights K(z/b)/b."""
        check_bandwidth(b)
        return self(np.asarray(z) / b) / b


def _epanechnikov(z):
    return np.where(np.abs(z) <= 1.0, 0.75 * (1.0 - z ** 2), 0.0)


def _gaussian_truncated(z):
    # renormalised so the truncated density still integrates to one
    return np.where(np.abs(z) <= _GAUSS_CUTOFF, norm.pdf(z) / _GAUSS_MASS, 0.0)


def _uniform(z):
    return np.where(np.abs(z) <= 1.0, 0.5, 0.0)


_REGISTRY = {
    "epanechnikov": (1.0, _epanechnikov),
    "gaussian": (_GAUSS_CUTOFF, _gaussian_truncated),
    "uniform": (1.0, _uniform),
}

KERNEL_NAMES = tuple(_REGISTRY)


def get_kernel(name: str = "epanechnikov") -> Kernel:
    try:
        support, func = _REGISTRY[name]
    except KeyError:
        raise DomainError(
            f"unknown kernel {name!r}; choose one of {KERNEL_NAMES}"
        ) from None
    return Kernel(name=name, support=support, _func=func)


def check_bandwidth(b: float) -> float:
    """Validate 0 < b <= 1 (rescaled-time units)."""
    if not (0.0 < b <= 1.0):
        raise DomainError(f"bandwidth must satisfy 0 < b <= 1, got {b}")
    return float(b)
