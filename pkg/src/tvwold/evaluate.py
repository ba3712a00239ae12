"""Out-of-sample evaluation: rolling forecasts, loss functions, relative
losses versus a baseline, and cross-sectional aggregation over a panel.

Forecast origins advance one observation at a time; a forecast at horizon h
made at origin s is scored against the realised value at s + h, and origins
whose target falls outside the sample are skipped.  Under the default
fixed-parameter mode every model is fitted once on the in-sample window;
``recursive=True`` refits at every origin.  Sub-period membership is decided
by the target date.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd

from .exceptions import DomainError, TvWoldError
from .series import Panel, TimeSeries

__all__ = ["rmse", "mae", "rolling_forecasts", "evaluate", "LossTable"]

FULL_PERIOD = "full"


def rmse(errors) -> float:
    """Root mean square error of a nonempty error sequence."""
    e = np.asarray(errors, dtype=float)
    if e.size == 0:
        raise DomainError("rmse of an empty error sequence is undefined")
    if not np.all(np.isfinite(e)):
        raise DomainError("rmse input contains non-finite entries")
    return float(np.sqrt(np.mean(e ** 2)))


def mae(errors) -> float:
    """Mean absolute error of a nonempty error sequence."""
    e = np.asarray(errors, dtype=float)
    if e.size == 0:
        raise DomainError("mae of an empty error sequence is undefined")
    if not np.all(np.isfinite(e)):
        raise DomainError("mae input contains non-finite entries")
    return float(np.mean(np.abs(e)))


def rolling_forecasts(
    model,
    values,
    in_sample_len: int,
    horizon: int,
    recursive: bool = False,
    fitted: bool = False,
) -> pd.DataFrame:
    """One-origin-at-a-time forecasts against realised values.

    Returns a frame with columns origin, target, forecast, realized.  The
    origin index is 0-based and points at the last observation the forecast
    may use.
    """
    x = values.values if isinstance(values, TimeSeries) else np.asarray(values, float)
    T = len(x)
    m = in_sample_len
    if not 1 <= m < T:
        raise DomainError(f"in-sample length {m} violates 1 <= m < T={T}")
    if horizon < 1:
        raise DomainError(f"horizon must be >= 1, got {horizon}")
    if m + horizon > T:
        raise DomainError(
            f"no scoreable origin: in-sample {m} + horizon {horizon} > T={T}"
        )
    origins = np.arange(m - 1, T - horizon)
    if not recursive and not fitted:
        model.fit(x[:m])
    if not recursive and hasattr(model, "forecast_path"):
        preds = model.forecast_path(x, origins, horizon)
    else:
        preds = np.empty(len(origins))
        for i, s in enumerate(origins):
            if recursive:
                model.fit(x[: s + 1])
            preds[i] = model.forecast(history=x[: s + 1], horizon=horizon)
    return pd.DataFrame(
        {
            "origin": origins,
            "target": origins + horizon,
            "forecast": preds,
            "realized": x[origins + horizon],
        }
    )


@dataclass
class LossTable:
    """Tidy per-asset losses, relative losses and cross-sectional medians."""

    losses: pd.DataFrame
    relative: pd.DataFrame
    medians: pd.DataFrame
    baseline: str
    failures: list = field(default_factory=list)
    forecasts: Optional[pd.DataFrame] = None

    def summary_md(self) -> str:
        """Markdown view: one block per period, models x horizons, losses
        relative to the baseline."""
        lines = [f"# Out-of-sample losses relative to {self.baseline}", ""]
        for period, chunk in self.medians.groupby("period", sort=False):
            lines.append(f"## Period: {period}")
            horizons = sorted(chunk["horizon"].unique())
            header = "| model | " + " | ".join(
                f"RMSE h={h} | MAE h={h}" for h in horizons
            ) + " |"
            sep = "|" + "---|" * (2 * len(horizons) + 1)
            lines += [header, sep]
            for model, rows in chunk.groupby("model", sort=False):
                cells = []
                for h in horizons:
                    r = rows[rows["horizon"] == h]
                    if len(r):
                        cells.append(f"{r['rel_rmse'].iloc[0]:.3f}")
                        cells.append(f"{r['rel_mae'].iloc[0]:.3f}")
                    else:
                        cells += ["-", "-"]
                lines.append(f"| {model} | " + " | ".join(cells) + " |")
            lines.append("")
        if self.failures:
            lines.append("## Excluded series")
            for f in self.failures:
                lines.append(f"- {f}")
            lines.append("")
        return "\n".join(lines)


def _target_stamps(series: TimeSeries, targets: np.ndarray):
    if series.timestamps is None:
        return None
    return pd.to_datetime(np.asarray(series.timestamps)[targets])


def _period_mask(stamps, period):
    if period is None:
        return slice(None)
    if stamps is None:
        raise DomainError("sub-period filtering needs timestamped series")
    start, end = (pd.Timestamp(p) for p in period)
    return (stamps >= start) & (stamps <= end)


def evaluate(
    panel,
    model_factories: dict,
    in_sample_len: int,
    horizons,
    baseline: str,
    recursive: bool = False,
    subperiods: Optional[dict] = None,
    keep_forecasts: bool = False,
) -> LossTable:
    """Run every model over every asset and horizon; score against baseline.

    ``model_factories`` maps model name to a zero-argument callable returning
    a fresh model.  Per-asset failures are recorded and excluded, never
    silently dropped.  Relative losses divide each model's loss by the
    baseline's on the same asset/horizon/period; medians aggregate those
    ratios across assets.
    """
    if isinstance(panel, TimeSeries):
        panel = Panel({"series": panel})
    if baseline not in model_factories:
        raise DomainError(f"baseline {baseline!r} not among models")
    periods = {FULL_PERIOD: None}
    if subperiods:
        periods.update(subperiods)
    rows = []
    failures = []
    kept = []
    for asset, series in panel:
        for name, factory in model_factories.items():
            model = factory()
            fitted = False
            for h in sorted(horizons):
                try:
                    frame = rolling_forecasts(
                        model, series, in_sample_len, h,
                        recursive=recursive, fitted=fitted,
                    )
                    fitted = not recursive
                except TvWoldError as exc:
                    failures.append(f"{asset}/{name}/h={h}: {exc}")
                    continue
                errors = frame["realized"].to_numpy() - frame["forecast"].to_numpy()
                if not np.all(np.isfinite(errors)):
                    failures.append(f"{asset}/{name}/h={h}: non-finite forecasts")
                    continue
                stamps = _target_stamps(series, frame["target"].to_numpy())
                if keep_forecasts:
                    kf = frame.assign(asset=asset, model=name, horizon=h)
                    kept.append(kf)
                for label, period in periods.items():
                    mask = _period_mask(stamps, period)
                    sub = errors[mask]
                    if sub.size == 0:
                        continue
                    rows.append(
                        {
                            "asset": asset,
                            "model": name,
                            "horizon": h,
                            "period": label,
                            "n_forecasts": int(sub.size),
                            "rmse": rmse(sub),
                            "mae": mae(sub),
                        }
                    )
    losses = pd.DataFrame(rows)
    if losses.empty:
        raise DomainError(
            "evaluation produced no scoreable cells; failures: " + "; ".join(failures)
        )
    base = losses[losses["model"] == baseline][
        ["asset", "horizon", "period", "rmse", "mae"]
    ].rename(columns={"rmse": "base_rmse", "mae": "base_mae"})
    relative = losses.merge(base, on=["asset", "horizon", "period"], how="inner")
    relative["rel_rmse"] = relative["rmse"] / relative["base_rmse"]
    relative["rel_mae"] = relative["mae"] / relative["base_mae"]
    relative = relative[
        ["asset", "model", "horizon", "period", "rel_rmse", "rel_mae"]
    ]
    medians = (
        relative.groupby(["model", "horizon", "period"], as_index=False)[
            ["rel_rmse", "rel_mae"]
        ]
        .median()
        .sort_values(["period", "model", "horizon"], ignore_index=True)
    )
    return LossTable(
        losses=losses,
        relative=relative,
        medians=medians,
        baseline=baseline,
        failures=failures,
        forecasts=pd.concat(kept, ignore_index=True) if kept else None,
    )
