"""Synthetic data generators with known ground truth, plus the brute-force
oracles the test suite checks the production code against.

The oracles are deliberately naive (plain loops, linear solves, Monte Carlo
averaging) and share no code with the production paths.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import toeplitz

from .exceptions import DomainError
from .series import TimeSeries

__all__ = [
    "TvArDgp",
    "simulate",
    "simulate_preset",
    "DGP_NAMES",
    "dgp_a",
    "dgp_b",
    "dgp_c",
    "random_stable_ar",
    "oracle_scale_betas",
    "oracle_ar_to_ma",
    "oracle_ma_series",
    "oracle_forecast_scale",
]

_STABILITY_GRID = np.linspace(0.0, 1.0, 201)
_BURN_IN = 200


@dataclass(frozen=True)
class TvArDgp:
    """AR process with smoothly varying coefficient curves on [0, 1].

    ``ar_curves[i]`` maps rescaled time to the lag-(i+1) coefficient;
    stability (all companion roots inside the unit circle) is verified on a
    grid at construction.  Innovations are standard normal by default; a
    unit-variance Student-t is available for heavier tails.
    """

    ar_curves: Sequence[Callable[[float], float]]
    intercept_curve: Optional[Callable[[float], float]] = None
    innovation_sd: float = 1.0
    tail: str = "normal"
    t_dof: float = 5.0

    def __post_init__(self):
        if not self.ar_curves:
            raise DomainError("need at least one AR coefficient curve")
        if self.tail not in ("normal", "student_t"):
            raise DomainError(f"unknown tail {self.tail!r}")
        if self.tail == "student_t" and self.t_dof <= 2:
            raise DomainError("student_t tail needs dof > 2 for finite variance")
        p = len(self.ar_curves)
        for u in _STABILITY_GRID:
            phi = np.array([c(u) for c in self.ar_curves], dtype=float)
            comp = np.zeros((p, p))
            comp[0, :] = phi
            if p > 1:
                comp[np.arange(1, p), np.arange(p - 1)] = 1.0
            if np.max(np.abs(np.linalg.eigvals(comp))) >= 1.0:
                raise DomainError(f"AR polynomial unstable at u={u:.3f}")

    @property
    def lag_order(self) -> int:
        return len(self.ar_curves)

    def coefficients_at(self, u: float) -> np.ndarray:
        return np.array([c(u) for c in self.ar_curves], dtype=float)

    def intercept_at(self, u: float) -> float:
        return 0.0 if self.intercept_curve is None else float(self.intercept_curve(u))


def _draw_innovations(dgp: TvArDgp, n: int, rng: np.random.Generator) -> np.ndarray:
    if dgp.tail == "student_t":
        raw = rng.standard_t(dgp.t_dof, size=n)
        raw /= np.sqrt(dgp.t_dof / (dgp.t_dof - 2.0))  # unit variance
    else:
        raw = rng.standard_normal(n)
    return dgp.innovation_sd * raw


def simulate(dgp: TvArDgp, n_obs: int, seed: int = 0) -> TimeSeries:
    """Generate ``n_obs`` observations with coefficients evaluated at t/T.

    A burn-in of 200 draws using the initial coefficient values is discarded;
    runs are bitwise reproducible for a fixed seed.
    """
    if n_obs < 100:
        raise DomainError(f"need n_obs >= 100, got {n_obs}")
    rng = np.random.default_rng(seed)
    p = dgp.lag_order
    total = n_obs + _BURN_IN
    eps = _draw_innovations(dgp, total, rng)
    x = np.zeros(total)
    u0 = 1.0 / n_obs
    for t in range(total):
        u = u0 if t < _BURN_IN else (t - _BURN_IN + 1) / n_obs
        phi = dgp.coefficients_at(u)
        acc = dgp.intercept_at(u) + eps[t]
        for i in range(1, min(t, p) + 1):
            acc += phi[i - 1] * x[t - i]
        x[t] = acc
    return TimeSeries(values=x[_BURN_IN:], frequency_label="synthetic")


def _logistic(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-z))


def dgp_a() -> TvArDgp:
    """AR(1) with linearly rising persistence: phi_1(u) = 0.2 + 0.6 u."""
    return TvArDgp(ar_curves=[lambda u: 0.2 + 0.6 * u])


def dgp_b() -> TvArDgp:
    """AR(2) whose persistence migrates smoothly from the fastest dyadic
    scales early in the sample to the 16-32 observation range late."""
    s = lambda u: _logistic(8.0 * (u - 0.5))
    return TvArDgp(
        ar_curves=[
            lambda u: 0.25 + 1.0 * s(u),
            lambda u: 0.05 - 0.35 * s(u),
        ]
    )


def dgp_c() -> TvArDgp:
    """Latent AR(2) with one fast and one slowly drifting persistent root,
    meant to be exponentiated into a positive, right-skewed
    volatility-like series with dynamics on several horizons."""
    fast = 0.5
    slow = lambda u: 0.93 + 0.05 * u
    return TvArDgp(
        ar_curves=[
            lambda u: fast + slow(u),
            lambda u: -fast * slow(u),
        ],
        innovation_sd=0.35,
    )


DGP_NAMES = ("a", "b", "c")


def simulate_preset(name: str, n_obs: int, seed: int = 0) -> TimeSeries:
    """Named test processes; preset ``c`` exponentiates the latent series."""
    name = name.lower()
    if name == "a":
        return simulate(dgp_a(), n_obs, seed)
    if name == "b":
        return simulate(dgp_b(), n_obs, seed)
    if name == "c":
        latent = simulate(dgp_c(), n_obs, seed)
        return TimeSeries(values=np.exp(latent.values), frequency_label="synthetic")
    raise DomainError(f"unknown preset {name!r}; choose from {DGP_NAMES}")


def random_stable_ar(p: int, rng: np.random.Generator, max_pacf: float = 0.9) -> np.ndarray:
    """Random stable AR(p) coefficients via the partial-autocorrelation map.

    Each partial autocorrelation is drawn uniformly inside (-max_pacf,
    max_pacf), which guarantees all companion roots stay inside the unit
    circle.
    """
    if p < 1:
        raise DomainError(f"lag order must be >= 1, got {p}")
    kappa = rng.uniform(-max_pacf, max_pacf, size=p)
    phi = np.array([kappa[0]])
    for m in range(1, p):
        phi = np.concatenate([phi - kappa[m] * phi[::-1], [kappa[m]]])
    return phi


# ---------------------------------------------------------------------------
# test oracles


def oracle_scale_betas(alpha: np.ndarray, n_scales: int, n_shifts: int) -> np.ndarray:
    """Literal term-by-term aggregation of MA coefficients into scale
    responses; used only as a cross-check."""
    alpha = np.asarray(alpha, dtype=float)
    out = np.zeros((n_scales, n_shifts))
    for j in range(1, n_scales + 1):
        for k in range(n_shifts):
            pos = sum(alpha[k * 2 ** j + i] for i in range(2 ** (j - 1)))
            neg = sum(
                alpha[k * 2 ** j + 2 ** (j - 1) + i] for i in range(2 ** (j - 1))
            )
            out[j - 1, k] = (pos - neg) / np.sqrt(2 ** j)
    return out


def oracle_ar_to_ma(phi: np.ndarray, truncation: int) -> np.ndarray:
    """MA coefficients by solving the triangular convolution system
    (polynomial inversion), not the production recursion."""
    phi = np.asarray(phi, dtype=float)
    col = np.zeros(truncation)
    col[0] = 1.0
    col[1 : len(phi) + 1] = -phi[: truncation - 1]
    A = toeplitz(col, np.zeros(truncation))
    e0 = np.zeros(truncation)
    e0[0] = 1.0
    return np.linalg.solve(A, e0)


def oracle_ma_series(alpha, eps: np.ndarray, times=None) -> np.ndarray:
    """Brute-force MA value sum_h alpha(u_t, h) eps_{t-h}; NaN before the
    support is covered.  ``alpha`` may be a single vector or one row per
    observation."""
    eps = np.asarray(eps, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    n = len(eps)
    if alpha.ndim == 1:
        alpha = np.tile(alpha, (n, 1))
    if alpha.shape[0] != n:
        raise DomainError("need one coefficient row per observation")
    M = alpha.shape[1]
    out = np.full(n, np.nan)
    for t in range(M - 1, n):
        acc = 0.0
        for h in range(M):
            acc += alpha[t, h] * eps[t - h]
        out[t] = acc
    return out


def oracle_forecast_scale(
    boundary_beta: np.ndarray,
    realized: np.ndarray,
    scale_j: int,
    horizon: int,
    n_paths: int = 10_000,
    seed: int = 0,
    innovation_sd: float = 1.0,
) -> tuple[float, float]:
    """Monte Carlo conditional expectation of one scale component.

    Simulates ``n_paths`` futures of the innovation sequence, rebuilds the
    component at origin + horizon from the combined history on every path,
    and averages.  Returns (estimate, standard error).
    """
    if n_paths < 10_000:
        raise DomainError(f"need n_paths >= 10000, got {n_paths}")
    rng = np.random.default_rng(seed)
    realized = np.asarray(realized, dtype=float)
    K = len(boundary_beta)
    half = 2 ** (scale_j - 1)
    vals = np.empty(n_paths)
    for path in range(n_paths):
        future = innovation_sd * rng.standard_normal(horizon)
        ext = np.concatenate([realized, future])
        t = len(ext) - 1  # index of origin + horizon
        acc = 0.0
        for k in range(K):
            date = t - k * 2 ** scale_j
            pos = ext[date - half + 1 : date + 1].sum()
            neg = ext[date - 2 * half + 1 : date - half + 1].sum()
            acc += boundary_beta[k] * (pos - neg) / np.sqrt(2 ** scale_j)
        vals[path] = acc
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(n_paths))
