"""Convert local AR coefficient curves into truncated MA (impulse response)
coefficients.

At each grid point the AR polynomial is frozen and inverted by the standard
recursion ``a(u, h) = sum_i phi_i(u) a(u, h-i)`` with ``a(u, 0) = 1``: the
moving-average representation of the stationary approximation at that point
in rescaled time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, EstimationError
from .local_linear import TvArFit

__all__ = ["MaRepresentation", "ar_to_ma"]

_DIVERGENCE_RUN = 10  # consecutive strictly growing |a| before a point is called explosive
_CLAMP = 1e12


@dataclass(frozen=True)
class MaRepresentation:
    """Truncated time-varying MA coefficients.

    ``ma_coeffs[g, h]`` is the response at lag ``h`` of the stationary
    approximation at ``grid[g]``; ``ma_coeffs[:, 0] == 1``.
    """

    grid: np.ndarray
    ma_coeffs: np.ndarray
    truncation: int
    stationary_flags: np.ndarray
    tail_ok: np.ndarray

    def __post_init__(self):
        if self.ma_coeffs.shape != (len(self.grid), self.truncation):
            raise DomainError(
                f"ma_coeffs shape {self.ma_coeffs.shape} inconsistent with "
                f"grid length {len(self.grid)} and truncation {self.truncation}"
            )
        if not np.allclose(self.ma_coeffs[:, 0], 1.0):
            raise DomainError("lag-0 MA coefficient must be 1 at every grid point")
        if not np.all(np.isfinite(self.ma_coeffs)):
            raise EstimationError("non-finite MA coefficients")

    def at(self, times: np.ndarray) -> np.ndarray:
        """Coefficients linearly interpolated in rescaled time: (len(times), N)."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        pos = np.searchsorted(self.grid, times, side="left")
        pos = np.clip(pos, 1, len(self.grid) - 1)
        left = self.grid[pos - 1]
        right = self.grid[pos]
        lam = np.clip((times - left) / (right - left), 0.0, 1.0)
        out = (1 - lam[:, None]) * self.ma_coeffs[pos - 1] + lam[:, None] * self.ma_coeffs[pos]
        return out


def ar_to_ma(
    fit: TvArFit,
    truncation: int,
    tail_tol: float = 1e-6,
    allow_nonstationary: bool = False,
) -> MaRepresentation:
    """Invert the AR curves of ``fit`` into MA coefficients up to ``truncation``.

    Divergence (|a| strictly growing above 1 for 10 consecutive lags) raises
    unless ``allow_nonstationary``, in which case the offending grid points
    keep their (magnitude-clamped) coefficients and are flagged.
    """
    if truncation < 2:
        raise DomainError(f"truncation must be >= 2, got {truncation}")
    phi = fit.phi
    G, p = phi.shape
    alpha = np.zeros((G, truncation))
    alpha[:, 0] = 1.0
    growth_run = np.zeros(G, dtype=int)
    explosive = np.zeros(G, dtype=bool)
    prev_abs = np.ones(G)
    for h in range(1, truncation):
        acc = np.zeros(G)
        for i in range(1, min(h, p) + 1):
            acc += phi[:, i - 1] * alpha[:, h - i]
        np.clip(acc, -_CLAMP, _CLAMP, out=acc)
        alpha[:, h] = acc
        cur_abs = np.abs(acc)
        growing = (cur_abs > prev_abs) & (cur_abs > 1.0)
        growth_run = np.where(growing, growth_run + 1, 0)
        explosive |= growth_run >= _DIVERGENCE_RUN
        prev_abs = cur_abs
    if explosive.any() and not allow_nonstationary:
        u_bad = fit.grid[int(np.flatnonzero(explosive)[0])]
        raise EstimationError(
            f"explosive local AR polynomial at u={u_bad:.4f} "
            f"({int(explosive.sum())} grid points total); "
            "pass allow_nonstationary to flag and clamp instead"
        )
    stationary = ~np.asarray(fit.nonstationary_points, dtype=bool) & ~explosive
    tail_ok = np.abs(alpha[:, -1]) <= tail_tol
    return MaRepresentation(
        grid=fit.grid,
        ma_coeffs=alpha,
        truncation=truncation,
        stationary_flags=stationary,
        tail_ok=tail_ok,
    )
