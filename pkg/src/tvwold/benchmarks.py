"""Reference forecasting models: AR(p), HAR, their time-varying analogues,
and the stationary scale-decomposition forecaster.

Every model exposes ``fit(in_sample)`` and ``forecast(history, horizon)``
where ``history`` extends the in-sample window and parameters stay frozen;
multi-step forecasts use iterated one-step substitution throughout.

The stationary decomposition forecaster is deliberately self-contained (its
own AR inversion, Haar filtering and partial-sum forecasting) so it can
serve as an independent cross-check of the time-varying pipeline when the
coefficient curves are constant.
"""

from __future__ import annotations

from collections import deque

import numpy as np
from scipy import signal

from .exceptions import DomainError, EstimationError
from .kernels import Kernel, get_kernel
from .local_linear import _local_linear_curves, _values

__all__ = [
    "ArModel",
    "HarModel",
    "TvArModel",
    "TvHarModel",
    "EwdModel",
    "make_model",
    "MODEL_NAMES",
]

HAR_WINDOWS = (1, 5, 22)


def _ols(X: np.ndarray, y: np.ndarray, label: str) -> np.ndarray:
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < X.shape[1]:
        # degenerate but exactly-fitting designs (e.g. constant series) keep
        # the least-norm solution; genuinely ambiguous fits are an error
        resid = y - X @ coef
        scale = max(float(np.abs(y).max()), 1.0)
        if np.abs(resid).max() > 1e-8 * scale:
            raise EstimationError(f"singular design in {label} fit")
    return coef


class ArModel:
    """OLS AR(p) with intercept, iterated for multi-step forecasts."""

    def __init__(self, p: int):
        if p < 1:
            raise DomainError(f"lag order must be >= 1, got {p}")
        self.p = p
        self.coef = None

    def fit(self, values) -> "ArModel":
        x = _values(values)
        if len(x) <= 5 * self.p:
            raise DomainError(f"need T > 5p = {5 * self.p}, got {len(x)}")
        p = self.p
        X = np.column_stack(
            [np.ones(len(x) - p)]
            + [x[p - i : len(x) - i] for i in range(1, p + 1)]
        )
        self.coef = _ols(X, x[p:], f"AR({p})")
        return self

    def fitted_values(self, values) -> np.ndarray:
        x = _values(values)
        p = self.p
        X = np.column_stack(
            [np.ones(len(x) - p)]
            + [x[p - i : len(x) - i] for i in range(1, p + 1)]
        )
        return X @ self.coef

    def forecast(self, history, horizon: int) -> float:
        x = _values(history)
        if self.coef is None:
            raise EstimationError("model not fitted")
        buf = list(x[-self.p :])
        for _ in range(horizon):
            nxt = self.coef[0] + float(
                np.dot(self.coef[1:], buf[::-1][: self.p])
            )
            buf.append(nxt)
        return float(buf[-1])


def _har_design(x: np.ndarray):
    """Rows t >= 22: [1, x_{t-1}, mean(x_{t-5..t-1}), mean(x_{t-22..t-1})]."""
    d, w, m = HAR_WINDOWS
    n = len(x)
    rows = np.arange(m, n)
    daily = x[rows - 1]
    weekly = np.array([x[t - w : t].mean() for t in rows])
    monthly = np.array([x[t - m : t].mean() for t in rows])
    X = np.column_stack([np.ones(len(rows)), daily, weekly, monthly])
    return X, x[rows]


def _har_regressors(buf) -> np.ndarray:
    arr = np.asarray(buf, dtype=float)
    return np.array([1.0, arr[-1], arr[-5:].mean(), arr[-22:].mean()])


class HarModel:
    """Heterogeneous AR: daily, weekly and monthly averages as regressors.

    Iterated forecasting rolls the 5- and 22-observation means forward with
    the forecasted values.
    """

    def __init__(self):
        self.coef = None

    def fit(self, values) -> "HarModel":
        x = _values(values)
        if len(x) <= 50:
            raise DomainError(f"need T > 50 observations, got {len(x)}")
        X, y = _har_design(x)
        self.coef = _ols(X, y, "HAR")
        return self

    def fitted_values(self, values) -> np.ndarray:
        X, _ = _har_design(_values(values))
        return X @ self.coef

    def forecast(self, history, horizon: int) -> float:
        if self.coef is None:
            raise EstimationError("model not fitted")
        x = _values(history)
        if len(x) < HAR_WINDOWS[2]:
            raise DomainError("history shorter than the monthly window")
        buf = deque(x[-HAR_WINDOWS[2] :], maxlen=HAR_WINDOWS[2])
        val = None
        for _ in range(horizon):
            val = float(self.coef @ _har_regressors(buf))
            buf.append(val)
        return val


class _BoundaryTvModel:
    """Shared machinery: local linear fit evaluated at u = 1, iterated."""

    bandwidth_default = 0.3

    def __init__(self, bandwidth: float = None, kernel: Kernel = None):
        self.bandwidth = self.bandwidth_default if bandwidth is None else bandwidth
        self.kernel = kernel or get_kernel()
        self.coef = None

    def _design(self, x):
        raise NotImplementedError

    def fit(self, values):
        x = _values(values)
        Z, y, times = self._design(x)
        vals, _, _ = _local_linear_curves(
            y, Z, times, np.array([1.0]), self.kernel, self.bandwidth,
            on_singular="least_norm",
        )
        self.coef = vals[0]
        return self


class TvArModel(_BoundaryTvModel):
    """AR(p) with locally fitted coefficients, forecast from the boundary."""

    def __init__(self, p: int, bandwidth: float = None, kernel: Kernel = None):
        super().__init__(bandwidth, kernel)
        if p < 1:
            raise DomainError(f"lag order must be >= 1, got {p}")
        self.p = p

    def _design(self, x):
        p = self.p
        if len(x) <= 10 * p:
            raise DomainError(f"need T > 10p = {10 * p}, got {len(x)}")
        Z = np.column_stack(
            [np.ones(len(x) - p)]
            + [x[p - i : len(x) - i] for i in range(1, p + 1)]
        )
        times = (np.arange(1, len(x) + 1) / len(x))[p:]
        return Z, x[p:], times

    def forecast(self, history, horizon: int) -> float:
        if self.coef is None:
            raise EstimationError("model not fitted")
        x = _values(history)
        buf = list(x[-self.p :])
        for _ in range(horizon):
            nxt = self.coef[0] + float(np.dot(self.coef[1:], buf[::-1][: self.p]))
            buf.append(nxt)
        return float(buf[-1])


class TvHarModel(_BoundaryTvModel):
    """HAR with locally fitted coefficients, forecast from the boundary."""

    def _design(self, x):
        if len(x) <= 50:
            raise DomainError(f"need T > 50 observations, got {len(x)}")
        X, y = _har_design(x)
        times = (np.arange(1, len(x) + 1) / len(x))[HAR_WINDOWS[2] :]
        return X, y, times

    def forecast(self, history, horizon: int) -> float:
        if self.coef is None:
            raise EstimationError("model not fitted")
        x = _values(history)
        if len(x) < HAR_WINDOWS[2]:
            raise DomainError("history shorter than the monthly window")
        buf = deque(x[-HAR_WINDOWS[2] :], maxlen=HAR_WINDOWS[2])
        val = None
        for _ in range(horizon):
            val = float(self.coef @ _har_regressors(buf))
            buf.append(val)
        return val


class EwdModel:
    """Stationary scale-decomposition forecaster.

    One global OLS AR(p) fit, constant impulse responses, Haar detail
    shocks, component regression weights, and partial-sum scale forecasts.
    The default ``"conditional"`` combination adds the low-pass residual's
    conditional expectation on top of the sample-mean trend; ``"anchored"``
    iterates an OLS AR(1) on the raw series from the origin's last value and
    drops the residual.
    """

    def __init__(
        self,
        n_scales: int = 5,
        ar_lags: int = 2,
        n_shifts: int = None,
        truncation: int = None,
        include_trend: bool = True,
        combination: str = "conditional",
    ):
        if n_scales < 1:
            raise DomainError(f"n_scales must be >= 1, got {n_scales}")
        if ar_lags < 1:
            raise DomainError(f"ar_lags must be >= 1, got {ar_lags}")
        if combination not in ("conditional", "anchored"):
            raise DomainError(f"unknown combination {combination!r}")
        self.n_scales = n_scales
        self.ar_lags = ar_lags
        self.n_shifts = n_shifts
        self.truncation = truncation or 2 ** n_scales * 32
        self.include_trend = include_trend
        self.combination = combination
        self.ar_coef = None
        self.mean = None
        self.beta = None
        self.gamma = None
        self.weights = None
        self.trend_coef = None

    # -- internals, deliberately independent of the time-varying modules ----

    def _impulse_response(self, phi: np.ndarray) -> np.ndarray:
        ar_poly = np.concatenate([[1.0], -phi])
        impulse = np.zeros(self.truncation)
        impulse[0] = 1.0
        return signal.lfilter([1.0], ar_poly, impulse)

    def _scale_coeffs(self, alpha: np.ndarray, K: int) -> np.ndarray:
        J = self.n_scales
        beta = np.zeros((J, K))
        for j in range(1, J + 1):
            half = 2 ** (j - 1)
            for k in range(K):
                s = k * 2 ** j
                pos = alpha[s : s + half].sum()
                neg = alpha[s + half : s + 2 * half].sum()
                beta[j - 1, k] = (pos - neg) / np.sqrt(2 ** j)
        return beta

    def _details(self, eps: np.ndarray) -> np.ndarray:
        J = self.n_scales
        out = np.full((J, len(eps)), np.nan)
        for j in range(1, J + 1):
            half = 2 ** (j - 1)
            for t in range(2 ** j - 1, len(eps)):
                pos = eps[t - half + 1 : t + 1].sum()
                neg = eps[t - 2 * half + 1 : t - half + 1].sum()
                out[j - 1, t] = (pos - neg) / np.sqrt(2 ** j)
        return out

    def _innovations(self, x: np.ndarray) -> np.ndarray:
        p = self.ar_lags
        centered = x - self.mean
        lags = np.column_stack(
            [centered[p - i : len(x) - i] for i in range(1, p + 1)]
        )
        return centered[p:] - lags @ self.ar_coef

    def fit(self, values) -> "EwdModel":
        x = _values(values)
        p = self.ar_lags
        if len(x) <= 10 * p:
            raise DomainError(f"need T > 10p = {10 * p}, got {len(x)}")
        lags = [x[p - i : len(x) - i] for i in range(1, p + 1)]
        if self.include_trend:
            X = np.column_stack([np.ones(len(x) - p)] + lags)
            coef = _ols(X, x[p:], f"AR({p})")
            persistence = coef[1:].sum()
            if abs(1.0 - persistence) < 1e-8:
                raise EstimationError("unit-root AR fit: implied mean undefined")
            self.mean = coef[0] / (1.0 - persistence)
            self.ar_coef = coef[1:]
        else:
            X = np.column_stack(lags)
            self.ar_coef = _ols(X, x[p:], f"AR({p})")
            self.mean = 0.0
        alpha = self._impulse_response(self.ar_coef)
        K = self.n_shifts
        if K is None:
            by_trunc = self.truncation // 2 ** self.n_scales
            by_sample = (len(x) - p - (self.n_scales + 10)) // 2 ** self.n_scales
            K = min(by_trunc, by_sample)
            if K < 1:
                raise DomainError("sample too short for the requested scales")
        if K * 2 ** self.n_scales > self.truncation:
            raise DomainError(
                f"truncation {self.truncation} too small for {K} shifts"
            )
        self.beta = self._scale_coeffs(alpha, K)
        width = 2 ** self.n_scales
        self.gamma = np.array(
            [alpha[k * width : (k + 1) * width].sum() / np.sqrt(width) for k in range(K)]
        )
        eps = self._innovations(x)
        details = self._details(eps)
        comps = np.zeros((self.n_scales, len(eps)))
        for j in range(1, self.n_scales + 1):
            for k in range(K):
                lag = k * 2 ** j
                shifted = np.concatenate(
                    [np.full(lag, np.nan), details[j - 1, : len(eps) - lag]]
                )
                comps[j - 1] += self.beta[j - 1, k] * shifted
        mask = np.all(np.isfinite(comps), axis=0)
        target = (x - self.mean)[p:]
        sol, _, _, _ = np.linalg.lstsq(comps[:, mask].T, target[mask], rcond=None)
        self.weights = sol
        if self.include_trend:
            Xt = np.column_stack([np.ones(len(x) - 1), x[:-1]])
            self.trend_coef, _, _, _ = np.linalg.lstsq(Xt, x[1:], rcond=None)
        return self

    def _trend_forecast(self, last: float, horizon: int) -> float:
        if not self.include_trend:
            return 0.0
        if self.combination == "conditional":
            # the stationary trend path is the constant implied mean
            return float(self.mean)
        c, a = self.trend_coef
        steps = 1 if abs(a) >= 1.0 else horizon
        val = last
        for _ in range(steps):
            val = c + a * val
        return float(val)

    def forecast(self, history, horizon: int) -> float:
        if self.weights is None:
            raise EstimationError("model not fitted")
        if horizon < 1:
            raise DomainError(f"horizon must be >= 1, got {horizon}")
        x = _values(history)
        eps = self._innovations(x)
        cum = np.concatenate([[0.0], np.cumsum(eps)])
        origin = len(eps) - 1

        def block(a, b):
            b = min(b, origin)
            a = max(a, 0)
            return cum[b + 1] - cum[a] if b >= a else 0.0

        total = self._trend_forecast(x[-1], horizon)
        K = self.beta.shape[1]
        for j in range(1, self.n_scales + 1):
            half = 2 ** (j - 1)
            acc = 0.0
            for k in range(K):
                date = origin + horizon - k * 2 ** j
                pos = block(date - half + 1, date)
                neg = block(date - 2 * half + 1, date - half)
                acc += self.beta[j - 1, k] * (pos - neg) / np.sqrt(2 ** j)
            total += self.weights[j - 1] * acc
        if self.combination == "conditional":
            width = 2 ** self.n_scales
            resid = 0.0
            for k in range(K):
                date = origin + horizon - k * width
                resid += self.gamma[k] * block(date - width + 1, date) / np.sqrt(width)
            total += resid
        return float(total)


MODEL_NAMES = ("ar1", "ar3", "har", "tvar1", "tvar3", "tvhar", "ewd", "tvewd")


def make_model(name: str, **kwargs):
    """Factory by CLI name: ar<p>, har, tvar<p>, tvhar, ewd, tvewd."""
    from .forecast import ForecastConfig, TvEwdForecaster

    name = name.lower().strip()
    if name.startswith("tvar"):
        return TvArModel(int(name[4:]), bandwidth=kwargs.get("bandwidth"))
    if name == "tvhar":
        return TvHarModel(bandwidth=kwargs.get("bandwidth"))
    if name.startswith("ar"):
        return ArModel(int(name[2:]))
    if name == "har":
        return HarModel()
    if name == "ewd":
        return EwdModel(
            n_scales=kwargs.get("n_scales", 5),
            ar_lags=kwargs.get("ar_lags", 2),
            n_shifts=kwargs.get("n_shifts"),
            truncation=kwargs.get("truncation"),
        )
    if name == "tvewd":
        cfg = ForecastConfig(
            n_scales=kwargs.get("n_scales", 5),
            ar_lags=kwargs.get("ar_lags", 2),
            trend_bandwidth=kwargs.get("trend_bandwidth", 0.6),
            ma_bandwidth=kwargs.get("ma_bandwidth", 0.2),
            n_shifts=kwargs.get("n_shifts"),
            truncation=kwargs.get("truncation"),
            allow_nonstationary=kwargs.get("allow_nonstationary", False),
        )
        return TvEwdForecaster(cfg)
    raise DomainError(f"unknown model name {name!r}; known: {MODEL_NAMES}")
