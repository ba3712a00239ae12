"""Local linear estimation of time-varying trend and AR coefficient curves.

At every target point ``u`` in rescaled time the estimator solves a
kernel-weighted least squares with design ``[Z, (t/T - u) * Z]`` so each
coefficient is fitted together with its local slope.  Boundary points simply
get one-sided windows: no reflection or padding, the linear term absorbs the
boundary bias.  Windows with fewer than ``2d + 2`` positively weighted points
are widened by a factor 1.5 until populated, and every widening is recorded.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import DomainError, EstimationError
from .kernels import Kernel, check_bandwidth, get_kernel
from .series import TimeSeries


def _values(x) -> np.ndarray:
    if isinstance(x, TimeSeries):
        return x.values
    return np.asarray(x, dtype=float)

__all__ = [
    "TrendFit",
    "TvArFit",
    "estimate_trend",
    "estimate_tvar",
    "fit_tvp_ar",
    "cross_validate_bandwidth",
    "cross_validate_trend_bandwidth",
    "DEFAULT_BANDWIDTH_GRID",
]

DEFAULT_BANDWIDTH_GRID = tuple(np.round(np.arange(0.05, 0.601, 0.05), 2))

_MAX_WIDENINGS = 20


@dataclass(frozen=True)
class TrendFit:
    """Local linear trend: level and slope curves on ``grid``."""

    grid: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    bandwidth: float
    adjustments: tuple = ()

    def at(self, times: np.ndarray) -> np.ndarray:
        return np.interp(times, self.grid, self.values)


@dataclass(frozen=True)
class TvArFit:
    """Time-varying AR estimates: coefficient curves, slopes and innovations.

    ``phi[g, i]`` is the lag-(i+1) coefficient at ``grid[g]``; ``innovations``
    holds the one-step residuals for observations p+1..T, each computed with
    the curves evaluated at the observation's own rescaled time.
    """

    lag_order: int
    grid: np.ndarray
    phi0: np.ndarray
    phi0_deriv: np.ndarray
    phi: np.ndarray
    phi_derivs: np.ndarray
    innovations: np.ndarray
    centered: np.ndarray
    trend_bandwidth: Optional[float]
    ar_bandwidth: float
    nonstationary_points: np.ndarray = None
    adjustments: tuple = ()

    def __post_init__(self):
        if np.any(np.diff(self.grid) <= 0):
            raise DomainError("grid points must be strictly increasing")
        if self.grid[0] < 0 or self.grid[-1] > 1:
            raise DomainError("grid points must lie in [0, 1]")
        for name in ("phi0", "phi", "phi_derivs"):
            arr = getattr(self, name)
            if not np.all(np.isfinite(arr)):
                raise EstimationError(f"non-finite entries in fitted {name}")

    @property
    def n_obs(self) -> int:
        return len(self.centered)

    def phi_at(self, times: np.ndarray) -> np.ndarray:
        """Coefficient curves linearly interpolated at arbitrary times."""
        times = np.atleast_1d(times)
        out = np.empty((len(times), self.lag_order))
        for i in range(self.lag_order):
            out[:, i] = np.interp(times, self.grid, self.phi[:, i])
        return out

    def phi0_at(self, times: np.ndarray) -> np.ndarray:
        return np.interp(times, self.grid, self.phi0)


def _lag_matrix(x: np.ndarray, p: int) -> np.ndarray:
    """Rows t = p..n-1 of (x_{t-1}, ..., x_{t-p})."""
    n = len(x)
    cols = [x[p - i : n - i] for i in range(1, p + 1)]
    return np.column_stack(cols)


def _moment_blocks(Z, y, W, D):
    """Stacked normal-equation blocks for all grid points in a chunk.

    Returns ``M`` of shape (g, 2d, 2d) and ``rhs`` of shape (g, 2d) for the
    design ``[Z, D*Z]`` under weights ``W`` (both (n, g))."""
    n, d = Z.shape
    iu, ju = np.triu_indices(d)
    P = Z[:, iu] * Z[:, ju]  # (n, npairs)
    WD = W * D
    WDD = WD * D
    A = P.T @ W
    B = P.T @ WD
    C = P.T @ WDD
    g = W.shape[1]
    M = np.empty((g, 2 * d, 2 * d))
    for blk, src in ((0, A), (1, B), (3, C)):
        full = np.empty((g, d, d))
        full[:, iu, ju] = src.T
        full[:, ju, iu] = src.T
        if blk == 0:
            M[:, :d, :d] = full
        elif blk == 1:
            M[:, :d, d:] = full
            M[:, d:, :d] = full
        else:
            M[:, d:, d:] = full
    rhs = np.empty((g, 2 * d))
    rhs[:, :d] = (Z.T @ (W * y[:, None])).T
    rhs[:, d:] = (Z.T @ (WD * y[:, None])).T
    return M, rhs


def _solve_equilibrated(M, rhs):
    """Batched symmetric solve with Jacobi scaling to tame the scale gap
    between level and interaction blocks."""
    d = np.sqrt(np.einsum("gii->gi", M))
    d[~(d > 0)] = 1.0
    Ms = M / (d[:, :, None] * d[:, None, :])
    sol = np.linalg.solve(Ms, (rhs / d)[:, :, None])[:, :, 0]
    return sol / d


def _fit_single_point(y, Z, times, u, kernel, b, need, on_singular, adjustments):
    """One grid point, widening the window until populated."""
    d = Z.shape[1]
    b_eff = b
    for _ in range(_MAX_WIDENINGS):
        # widened windows may legitimately exceed b = 1, so scale directly
        w = kernel((times - u) / b_eff) / b_eff
        active = w > 0
        if active.sum() >= need and len(np.unique(times[active])) >= 2:
            break
        b_eff *= 1.5
    else:
        raise EstimationError(
            f"window at u={u:.4f} could not be populated "
            f"(need {need} positively weighted points)"
        )
    if b_eff != b:
        adjustments.append((float(u), float(b_eff)))
    sw = np.sqrt(w[active])
    dd = (times[active] - u)[:, None]
    X = np.hstack([Z[active], dd * Z[active]]) * sw[:, None]
    yy = y[active] * sw
    sol, _, rank, _ = np.linalg.lstsq(X, yy, rcond=None)
    if rank < 2 * d and on_singular == "error":
        raise EstimationError(
            f"rank-deficient local design at u={u:.4f} (rank {rank} < {2 * d})"
        )
    return sol


def _local_linear_curves(
    y,
    Z,
    times,
    grid,
    kernel,
    b,
    on_singular="error",
    chunk_elems=4_000_000,
):
    """Fit ``y ~ Z`` with locally linear coefficients at every grid point.

    Returns (values (G, d), derivs (G, d), adjustments list)."""
    y = np.asarray(y, dtype=float)
    Z = np.asarray(Z, dtype=float)
    times = np.asarray(times, dtype=float)
    grid = np.asarray(grid, dtype=float)
    n, d = Z.shape
    need = 2 * d + 2
    check_bandwidth(b)
    values = np.empty((len(grid), d))
    derivs = np.empty((len(grid), d))
    adjustments: list = []
    step = max(1, int(chunk_elems // max(n, 1)))
    for start in range(0, len(grid), step):
        u_chunk = grid[start : start + step]
        D = times[:, None] - u_chunk[None, :]
        W = kernel(D / b) / b
        counts = (W > 0).sum(axis=0)
        M, rhs = _moment_blocks(Z, y, W, D)
        sol = np.full((len(u_chunk), 2 * d), np.nan)
        ok = counts >= need
        if ok.any():
            try:
                sol[ok] = _solve_equilibrated(M[ok], rhs[ok])
            except np.linalg.LinAlgError:
                ok = np.zeros_like(ok)  # retry everything pointwise
        bad = ~ok | ~np.all(np.isfinite(sol), axis=1)
        for idx in np.flatnonzero(bad):
            sol[idx] = _fit_single_point(
                y, Z, times, u_chunk[idx], kernel, b, need, on_singular, adjustments
            )
        values[start : start + step] = sol[:, :d]
        derivs[start : start + step] = sol[:, d:]
    return values, derivs, adjustments


def estimate_trend(
    values: np.ndarray,
    kernel: Kernel = None,
    bandwidth: float = 0.6,
    grid: np.ndarray = None,
) -> tuple[TrendFit, np.ndarray]:
    """Local linear trend curve and the centered series.

    The trend at ``u`` is the intercept of the weighted fit of the series on
    ``[1, t/T - u]``; centering subtracts the curve evaluated at each
    observation's own rescaled time.
    """
    kernel = kernel or get_kernel()
    x = _values(values)
    T = len(x)
    if T < 2:
        raise DomainError("need at least 2 observations")
    if T * bandwidth < 5:
        raise DomainError(
            f"T*b = {T * bandwidth:.2f} < 5: window too narrow for trend fit"
        )
    times = np.arange(1, T + 1) / T
    if grid is None:
        grid = times
    ones = np.ones((T, 1))
    vals, ders, adj = _local_linear_curves(
        x, ones, times, grid, kernel, bandwidth, on_singular="error"
    )
    fit = TrendFit(
        grid=np.asarray(grid, dtype=float),
        values=vals[:, 0],
        derivs=ders[:, 0],
        bandwidth=float(bandwidth),
        adjustments=tuple(adj),
    )
    centered = x - fit.at(times)
    return fit, centered


def estimate_tvar(
    centered: np.ndarray,
    p: int,
    kernel: Kernel = None,
    bandwidth: float = 0.2,
    grid: np.ndarray = None,
) -> TvArFit:
    """Time-varying AR(p) coefficient curves on centered data.

    Solves, at every grid point, the 2p-dimensional weighted least squares on
    lagged levels and their interactions with ``t/T - u``.  Innovations are
    the residuals with the curves evaluated at each observation's own time.
    """
    kernel = kernel or get_kernel()
    x = _values(centered)
    T = len(x)
    if p < 1:
        raise DomainError(f"lag order must be >= 1, got {p}")
    if T <= 10 * p:
        raise DomainError(f"need T > 10*p, got T={T}, p={p}")
    times = np.arange(1, T + 1) / T
    if grid is None:
        grid = times
    grid = np.asarray(grid, dtype=float)
    Z = _lag_matrix(x, p)
    y = x[p:]
    obs_times = times[p:]
    phi, phi_derivs, adj = _local_linear_curves(
        y, Z, obs_times, grid, kernel, bandwidth, on_singular="error"
    )
    fit = TvArFit(
        lag_order=p,
        grid=grid,
        phi0=np.zeros(len(grid)),
        phi0_deriv=np.zeros(len(grid)),
        phi=phi,
        phi_derivs=phi_derivs,
        innovations=_innovations(x, p, grid, phi, times),
        centered=x,
        trend_bandwidth=None,
        ar_bandwidth=float(bandwidth),
        nonstationary_points=_nonstationary_flags(phi),
        adjustments=tuple(adj),
    )
    return fit


def _innovations(x, p, grid, phi, times):
    Z = _lag_matrix(x, p)
    coef = np.empty_like(Z)
    for i in range(p):
        coef[:, i] = np.interp(times[p:], grid, phi[:, i])
    return x[p:] - np.sum(coef * Z, axis=1)


def _nonstationary_flags(phi: np.ndarray) -> np.ndarray:
    """True where the local AR polynomial has a root on or inside the unit
    circle (companion eigenvalue modulus >= 1)."""
    G, p = phi.shape
    if p == 1:
        return np.abs(phi[:, 0]) >= 1.0
    comp = np.zeros((G, p, p))
    comp[:, 0, :] = phi
    idx = np.arange(p - 1)
    comp[:, idx + 1, idx] = 1.0
    eig = np.linalg.eigvals(comp)
    return np.max(np.abs(eig), axis=1) >= 1.0


def fit_tvp_ar(
    values: np.ndarray,
    p: int,
    kernel: Kernel = None,
    trend_bandwidth: float = 0.6,
    ar_bandwidth: float = 0.2,
    grid: np.ndarray = None,
    detrend: bool = True,
) -> TvArFit:
    """Full two-step fit: local linear trend, then TV-AR on the centered data."""
    kernel = kernel or get_kernel()
    x = _values(values)
    if detrend:
        trend, centered = estimate_trend(x, kernel, trend_bandwidth, grid)
    else:
        T = len(x)
        g = np.arange(1, T + 1) / T if grid is None else np.asarray(grid, float)
        trend = TrendFit(grid=g, values=np.zeros(len(g)), derivs=np.zeros(len(g)),
                         bandwidth=float(trend_bandwidth))
        centered = x.copy()
    ar = estimate_tvar(centered, p, kernel, ar_bandwidth, grid)
    return TvArFit(
        lag_order=p,
        grid=ar.grid,
        phi0=trend.values,
        phi0_deriv=trend.derivs,
        phi=ar.phi,
        phi_derivs=ar.phi_derivs,
        innovations=ar.innovations,
        centered=centered,
        trend_bandwidth=float(trend_bandwidth) if detrend else None,
        ar_bandwidth=float(ar_bandwidth),
        nonstationary_points=ar.nonstationary_points,
        adjustments=trend.adjustments + ar.adjustments,
    )


def _loo_cv_score(y, Z, times, kernel, b):
    """Leave-one-out prediction error when each observation is predicted from
    the fit at its own rescaled time with its own weight zeroed.

    The left-out observation sits at distance zero from the target point, so
    removing it only touches the level blocks of the normal equations."""
    n, d = Z.shape
    w_center = float(kernel(np.zeros(1))[0]) / b
    total = 0.0
    step = max(1, int(4_000_000 // max(n, 1)))
    for start in range(0, n, step):
        sl = slice(start, min(start + step, n))
        D = times[:, None] - times[None, sl]
        W = kernel(D / b) / b
        counts = (W > 0).sum(axis=0) - 1
        if np.any(counts < 2 * d):
            raise EstimationError(
                f"bandwidth {b} leaves under-populated leave-one-out windows"
            )
        M, rhs = _moment_blocks(Z, y, W, D)
        M[:, :d, :d] -= w_center * (Z[sl, :, None] * Z[sl, None, :])
        rhs[:, :d] -= w_center * (y[sl, None] * Z[sl])
        sol = _solve_equilibrated(M, rhs)
        pred = np.sum(Z[sl] * sol[:, :d], axis=1)
        resid = y[sl] - pred
        if not np.all(np.isfinite(resid)):
            raise EstimationError(f"non-finite leave-one-out residuals at b={b}")
        total += float(np.sum(resid ** 2))
    return total


def cross_validate_bandwidth(
    centered: np.ndarray,
    p: int,
    kernel: Kernel = None,
    candidates=None,
) -> float:
    """Pick the AR bandwidth by leave-one-out prediction error.

    Each observation is predicted from its own lags using the local fit at
    its own rescaled time with its kernel weight zeroed; ties break toward
    the larger bandwidth.
    """
    kernel = kernel or get_kernel()
    if candidates is None:
        candidates = DEFAULT_BANDWIDTH_GRID
    candidates = sorted({float(b) for b in candidates}, reverse=True)
    if not candidates:
        raise DomainError("candidate bandwidth grid is empty")
    x = _values(centered)
    Z = _lag_matrix(x, p)
    y = x[p:]
    times = (np.arange(1, len(x) + 1) / len(x))[p:]
    return _cv_scan(y, Z, times, kernel, candidates)


def cross_validate_trend_bandwidth(
    values: np.ndarray,
    kernel: Kernel = None,
    candidates=None,
) -> float:
    """Leave-one-out bandwidth choice for the trend curve."""
    kernel = kernel or get_kernel()
    if candidates is None:
        candidates = DEFAULT_BANDWIDTH_GRID
    candidates = sorted({float(b) for b in candidates}, reverse=True)
    if not candidates:
        raise DomainError("candidate bandwidth grid is empty")
    x = _values(values)
    times = np.arange(1, len(x) + 1) / len(x)
    return _cv_scan(x, np.ones((len(x), 1)), times, kernel, candidates)


def _cv_scan(y, Z, times, kernel, candidates_desc):
    best_b, best_score = None, np.inf
    failures = []
    for b in candidates_desc:
        try:
            check_bandwidth(b)
            score = _loo_cv_score(y, Z, times, kernel, b)
        except (EstimationError, DomainError, np.linalg.LinAlgError) as exc:
            failures.append(f"b={b}: {exc}")
            continue
        if score < best_score:
            best_b, best_score = b, score
    if best_b is None:
        raise EstimationError(
            "all candidate bandwidths failed: " + "; ".join(failures)
        )
    return best_b
