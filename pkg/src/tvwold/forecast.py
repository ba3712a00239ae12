"""Multi-horizon forecasting by recombining trend and scale-component
predictions.

Each scale component is extrapolated through the conditional expectation of
its future detail shocks: innovations dated up to the forecast origin keep
their realised values and Haar signs, future innovations are zero.  The
combination weights come from an in-sample regression of the centered
series on the components.

Two combination modes are supported.  The default, ``"conditional"``,
extrapolates the fitted trend path with a boundary AR(1) and adds the
conditional expectation of the low-pass residual on top of the weighted
detail forecasts, so for strongly persistent data no forecastable level
information is dropped.  ``"anchored"`` instead iterates a boundary AR(1)
fitted to the raw series from the origin's last observation and excludes
the residual; it responds to the current level twice (once through the
trend, once through the details) and is kept for comparison only.

Parameters estimated on the in-sample window stay frozen while the forecast
origin rolls forward; innovations beyond the window are computed with the
boundary (u = 1) coefficient values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .decompose import ScaleDecomposition, decompose, default_n_shifts
from .exceptions import DomainError, EstimationError
from .kernels import Kernel, get_kernel
from .local_linear import TvArFit, _local_linear_curves, _values, fit_tvp_ar
from .wold import MaRepresentation, ar_to_ma

__all__ = [
    "ScaleWeights",
    "ForecastConfig",
    "fit_weights",
    "forecast_trend",
    "expected_detail_shock",
    "forecast_scale",
    "TvEwdForecaster",
]


@dataclass(frozen=True)
class ScaleWeights:
    """Combination weights with regression diagnostics."""

    weights: np.ndarray
    r_squared: float
    residuals: np.ndarray
    collinear: bool = False


@dataclass(frozen=True)
class ForecastConfig:
    """Everything needed to fit and forecast one series."""

    n_scales: int = 5
    ar_lags: int = 2
    horizon: int = 1
    trend_bandwidth: float = 0.6
    ma_bandwidth: float = 0.2
    kernel: str = "epanechnikov"
    n_shifts: Optional[int] = None
    truncation: Optional[int] = None
    detrend: bool = True
    allow_nonstationary: bool = False
    grid_points: Optional[int] = None
    combination: str = "conditional"

    def __post_init__(self):
        if self.horizon < 1:
            raise DomainError(f"horizon must be >= 1, got {self.horizon}")
        if self.n_scales < 1:
            raise DomainError(f"n_scales must be >= 1, got {self.n_scales}")
        if self.ar_lags < 1:
            raise DomainError(f"ar_lags must be >= 1, got {self.ar_lags}")
        if self.combination not in ("conditional", "anchored"):
            raise DomainError(
                f"combination must be 'conditional' or 'anchored', "
                f"got {self.combination!r}"
            )
        for name in ("trend_bandwidth", "ma_bandwidth"):
            b = getattr(self, name)
            if not 0 < b <= 1:
                raise DomainError(f"{name} must lie in (0, 1], got {b}")

    @property
    def effective_truncation(self) -> int:
        if self.truncation is not None:
            return self.truncation
        return 2 ** self.n_scales * 32


def fit_weights(centered: np.ndarray, components: np.ndarray) -> ScaleWeights:
    """OLS of the centered series on the scale components, no intercept.

    Rows with any unavailable component are dropped.  A rank-deficient
    component matrix falls back to the least-norm solution and is flagged.
    """
    y = np.asarray(centered, dtype=float)
    X = np.asarray(components, dtype=float).T  # (n, J)
    n, J = X.shape
    if len(y) != n:
        raise DomainError(f"centered length {len(y)} != component length {n}")
    mask = np.all(np.isfinite(X), axis=1) & np.isfinite(y)
    if mask.sum() < J + 10:
        raise DomainError(
            f"need at least {J + 10} fully supported observations to fit "
            f"weights, have {int(mask.sum())}"
        )
    Xm, ym = X[mask], y[mask]
    sol, _, rank, _ = np.linalg.lstsq(Xm, ym, rcond=None)
    resid = ym - Xm @ sol
    ss_tot = float(ym @ ym)
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 0.0
    return ScaleWeights(
        weights=sol,
        r_squared=r2,
        residuals=resid,
        collinear=rank < J,
    )


@dataclass(frozen=True)
class TrendModel:
    """Boundary AR(1) with intercept: x_{s+1} = intercept + slope * x_s."""

    intercept: float
    slope: float
    explosive: bool

    def iterate(self, last_value: float, horizon: int) -> float:
        # an explosive boundary coefficient gets one step and is then held
        steps = 1 if self.explosive else horizon
        x = float(last_value)
        for _ in range(steps):
            x = self.intercept + self.slope * x
        return x


def fit_trend_model(
    values: np.ndarray,
    kernel: Kernel = None,
    bandwidth: float = 0.6,
) -> TrendModel:
    """Local linear AR(1)+intercept at the boundary point u = 1."""
    kernel = kernel or get_kernel()
    x = _values(values)
    T = len(x)
    if T < 10:
        raise DomainError(f"need at least 10 observations, got {T}")
    times = (np.arange(1, T + 1) / T)[1:]
    Z = np.column_stack([np.ones(T - 1), x[:-1]])
    vals, _, _ = _local_linear_curves(
        x[1:], Z, times, np.array([1.0]), kernel, bandwidth,
        on_singular="least_norm",
    )
    intercept, slope = float(vals[0, 0]), float(vals[0, 1])
    return TrendModel(intercept=intercept, slope=slope, explosive=abs(slope) >= 1.0)


def _expected_lowpass(cum, n_scales, date, origin):
    width = 2 ** n_scales
    return _realized_block(cum, date - width + 1, date, origin) / np.sqrt(width)


def forecast_trend(
    values: np.ndarray,
    horizon: int,
    kernel: Kernel = None,
    bandwidth: float = 0.6,
) -> float:
    """Iterate the boundary AR(1) ``horizon`` steps from the last observation."""
    if horizon < 1:
        raise DomainError(f"horizon must be >= 1, got {horizon}")
    model = fit_trend_model(values, kernel, bandwidth)
    x = _values(values)
    return model.iterate(x[-1], horizon)


def _cumsum_with_zero(eps: np.ndarray) -> np.ndarray:
    return np.concatenate([[0.0], np.cumsum(eps)])


def _realized_block(cum: np.ndarray, a: int, b: int, origin: int) -> float:
    """Sum of innovations over indices [a, b] that are realised (<= origin)."""
    b = min(b, origin)
    a = max(a, 0)
    if b < a:
        return 0.0
    return cum[b + 1] - cum[a]


def expected_detail_shock(
    innovations: np.ndarray,
    scale_j: int,
    date: int,
    origin: int,
) -> float:
    """Conditional expectation at ``origin`` of the detail shock dated ``date``.

    Fundamental innovations dated after the origin enter as zero, realised
    ones with their Haar signs.  Indices refer to positions in
    ``innovations``.
    """
    cum = _cumsum_with_zero(np.asarray(innovations, dtype=float))
    return _expected_detail(cum, scale_j, date, origin)


def _expected_detail(cum, scale_j, date, origin):
    half = 2 ** (scale_j - 1)
    pos = _realized_block(cum, date - half + 1, date, origin)
    neg = _realized_block(cum, date - 2 * half + 1, date - half, origin)
    return (pos - neg) / np.sqrt(2 ** scale_j)


def forecast_scale(
    boundary_beta: np.ndarray,
    innovations: np.ndarray,
    scale_j: int,
    horizon: int,
    origin: Optional[int] = None,
) -> float:
    """Conditional expectation of scale ``scale_j`` at ``origin + horizon``.

    ``boundary_beta`` holds the responses at u = 1 for shifts 0..K-1; the
    origin defaults to the last innovation.  Horizon 0 involves no future
    innovations and returns the contemporaneous component value.
    """
    eps = np.asarray(innovations, dtype=float)
    if origin is None:
        origin = len(eps) - 1
    if horizon < 0:
        raise DomainError(f"horizon must be >= 0, got {horizon}")
    n_shifts = len(boundary_beta)
    deepest = origin + horizon - (n_shifts - 1) * 2 ** scale_j - 2 ** scale_j + 1
    if deepest < 0:
        raise DomainError(
            f"origin {origin} lacks history for scale {scale_j} with "
            f"{n_shifts} shifts (needs index {deepest})"
        )
    cum = _cumsum_with_zero(eps)
    total = 0.0
    for k in range(n_shifts):
        total += boundary_beta[k] * _expected_detail(
            cum, scale_j, origin + horizon - k * 2 ** scale_j, origin
        )
    return float(total)


class TvEwdForecaster:
    """Fit once on an in-sample window, forecast from any later origin.

    The fitted coefficient curves, scale responses and weights stay frozen;
    rolling forecasts only extend the innovation sequence, evaluating the
    curves at the boundary for observations past the window.
    """

    def __init__(self, config: ForecastConfig):
        self.config = config
        self.kernel = get_kernel(config.kernel)
        self.fit_result: Optional[TvArFit] = None
        self.ma: Optional[MaRepresentation] = None
        self.decomposition: Optional[ScaleDecomposition] = None
        self.scale_weights: Optional[ScaleWeights] = None
        self.trend_model: Optional[TrendModel] = None
        self.trend_start: Optional[float] = None
        self.boundary_beta: Optional[np.ndarray] = None
        self.boundary_gamma: Optional[np.ndarray] = None
        self.in_sample: Optional[np.ndarray] = None
        self.diagnostics: dict = {}

    # -- fitting -----------------------------------------------------------

    def fit(self, values) -> "TvEwdForecaster":
        cfg = self.config
        x = _values(values)
        m = len(x)
        grid = None
        if cfg.grid_points is not None:
            grid = np.linspace(1.0 / m, 1.0, cfg.grid_points)
        fit = fit_tvp_ar(
            x,
            cfg.ar_lags,
            self.kernel,
            trend_bandwidth=cfg.trend_bandwidth,
            ar_bandwidth=cfg.ma_bandwidth,
            grid=grid,
            detrend=cfg.detrend,
        )
        return self._install_fit(fit, x)

    def _install_fit(self, fit: TvArFit, x: np.ndarray) -> "TvEwdForecaster":
        """Everything past curve estimation; also the hook for injecting
        externally constructed (e.g. constant) coefficient curves."""
        cfg = self.config
        m = len(x)
        truncation = cfg.effective_truncation
        ma = ar_to_ma(fit, truncation, allow_nonstationary=cfg.allow_nonstationary)
        n_innov = m - cfg.ar_lags
        n_shifts = cfg.n_shifts
        if n_shifts is None:
            n_shifts = self._feasible_shifts(truncation, n_innov)
        innov_times = (np.arange(cfg.ar_lags + 1, m + 1) / m)
        dec = decompose(ma, fit.innovations, cfg.n_scales, n_shifts, innov_times)
        weights = fit_weights(fit.centered[cfg.ar_lags :], dec.components)
        self.fit_result = fit
        self.ma = ma
        self.decomposition = dec
        self.scale_weights = weights
        if not cfg.detrend:
            self.trend_model = TrendModel(0.0, 0.0, False)
            self.trend_start = 0.0
        elif cfg.combination == "anchored":
            self.trend_model = fit_trend_model(x, self.kernel, cfg.trend_bandwidth)
            self.trend_start = None  # iterated from the origin's last observation
        else:
            # extrapolate the fitted trend path itself from its boundary level
            self.trend_model = fit_trend_model(
                fit.phi0_at(np.arange(1, m + 1) / m), self.kernel, cfg.trend_bandwidth
            )
            self.trend_start = float(fit.phi0_at(np.array([1.0]))[0])
        self.boundary_beta = self._beta_at_boundary(dec)
        self.boundary_gamma = self._boundary_curve(dec.grid, dec.gamma)
        self.in_sample = x
        self.diagnostics = {
            "n_shifts": n_shifts,
            "truncation": truncation,
            "combination": cfg.combination,
            "weights": weights.weights.tolist(),
            "weight_r2": weights.r_squared,
            "collinear_components": weights.collinear,
            "trend_explosive": self.trend_model.explosive,
            "nonstationary_grid_points": int(fit.nonstationary_points.sum()),
            "bandwidth_adjustments": list(fit.adjustments),
        }
        return self

    def _feasible_shifts(self, truncation: int, n_innov: int) -> int:
        cfg = self.config
        by_truncation = default_n_shifts(truncation, cfg.n_scales)
        # keep enough supported observations for the weight regression
        by_sample = (n_innov - (cfg.n_scales + 10)) // 2 ** cfg.n_scales
        k = min(by_truncation, by_sample)
        if k < 1:
            raise DomainError(
                f"sample of {n_innov} innovations too short for "
                f"{cfg.n_scales} scales: no shift count leaves enough "
                "supported observations for the weight regression"
            )
        return k

    def _beta_at_boundary(self, dec: ScaleDecomposition) -> np.ndarray:
        return self._boundary_curve(dec.grid, dec.beta)

    @staticmethod
    def _boundary_curve(grid: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
        if grid[-1] >= 1.0:
            return coeffs[-1]
        lam = np.clip((1.0 - grid[-2]) / (grid[-1] - grid[-2]), 0.0, 1.0)
        return (1 - lam) * coeffs[-2] + lam * coeffs[-1]

    # -- forecasting -------------------------------------------------------

    def _require_fit(self):
        if self.fit_result is None:
            raise EstimationError("forecaster has not been fitted")

    def extended_innovations(self, history: np.ndarray) -> np.ndarray:
        """Innovations for the full history with curves frozen at u = 1 past
        the in-sample window; identical to the fitted ones inside it."""
        self._require_fit()
        fit = self.fit_result
        p = self.config.ar_lags
        m = len(self.in_sample)
        x = _values(history)
        if len(x) < m:
            raise DomainError("history must contain the in-sample window")
        times = np.arange(1, len(x) + 1) / m  # clipped implicitly by interp
        centered = x - fit.phi0_at(times) if self.config.detrend else x.copy()
        coef = fit.phi_at(times[p:])
        lags = np.column_stack(
            [centered[p - i : len(x) - i] for i in range(1, p + 1)]
        )
        return centered[p:] - np.sum(coef * lags, axis=1)

    def forecast(self, horizon: Optional[int] = None, history=None) -> float:
        """Point forecast ``horizon`` steps past the end of ``history``.

        ``history`` defaults to the in-sample window; when given it must
        start with it (frozen-parameter rolling forecasting).
        """
        self._require_fit()
        h = self.config.horizon if horizon is None else horizon
        x = self.in_sample if history is None else _values(history)
        eps = self.extended_innovations(x)
        return self._combine(x, eps, len(eps) - 1, h)

    def forecast_path(self, full_values, origins, horizon: int) -> np.ndarray:
        """Forecasts at many origins sharing one innovation extension.

        ``origins`` are 0-based indices into ``full_values``: the forecast at
        origin ``s`` uses data through ``s`` and targets ``s + horizon``.
        """
        self._require_fit()
        x = _values(full_values)
        eps = self.extended_innovations(x)
        p = self.config.ar_lags
        out = np.empty(len(origins))
        for i, s in enumerate(origins):
            out[i] = self._combine(x[: s + 1], eps[: s + 1 - p], s - p, horizon)
        return out

    def _combine(self, x, eps, origin_idx, horizon) -> float:
        cfg = self.config
        w = self.scale_weights.weights
        if not cfg.detrend:
            total = 0.0
        elif cfg.combination == "anchored":
            total = self.trend_model.iterate(x[-1], horizon)
        else:
            total = self.trend_model.iterate(self.trend_start, horizon)
        cum = _cumsum_with_zero(eps)
        K = self.decomposition.n_shifts
        for j in range(1, cfg.n_scales + 1):
            acc = 0.0
            for k in range(K):
                acc += self.boundary_beta[j - 1, k] * _expected_detail(
                    cum, j, origin_idx + horizon - k * 2 ** j, origin_idx
                )
            total += w[j - 1] * acc
        if cfg.combination == "conditional":
            width = 2 ** cfg.n_scales
            resid = 0.0
            for k in range(K):
                resid += self.boundary_gamma[k] * _expected_lowpass(
                    cum, cfg.n_scales, origin_idx + horizon - k * width, origin_idx
                )
            total += resid
        return float(total)
