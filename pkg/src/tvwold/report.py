"""Plot-ready frames and matplotlib figures for the CLI report paths.

Every figure is rendered straight to a file next to the delimited output;
nothing here opens an interactive window.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from .decompose import PersistenceRatios, ScaleDecomposition

__all__ = [
    "beta_frame",
    "components_frame",
    "ratios_frame",
    "save_persistence_figure",
    "save_components_figure",
    "save_forecast_figure",
    "save_relative_loss_boxplot",
]


def beta_frame(dec: ScaleDecomposition) -> pd.DataFrame:
    """Long-format scale responses: one row per (grid point, scale, shift)."""
    G, J, K = dec.beta.shape
    grid = np.repeat(dec.grid, J * K)
    scales = np.tile(np.repeat(np.arange(1, J + 1), K), G)
    shifts = np.tile(np.arange(K), G * J)
    return pd.DataFrame(
        {
            "u": grid,
            "scale": scales,
            "shift": shifts,
            "beta": dec.beta.reshape(-1),
        }
    )


def components_frame(dec: ScaleDecomposition, timestamps=None) -> pd.DataFrame:
    """Wide components table: one column per scale plus the residual."""
    J, n = dec.components.shape
    data = {"u": dec.innovation_times}
    if timestamps is not None:
        data["date"] = np.asarray(timestamps)[-n:]
    for j in range(1, J + 1):
        data[f"scale_{j}"] = dec.components[j - 1]
    data["residual"] = dec.residual
    data["reconstruction"] = dec.reconstruction()
    return pd.DataFrame(data)


def ratios_frame(ratios: PersistenceRatios, timestamps=None) -> pd.DataFrame:
    """Wide persistence-ratio table, one column per scale."""
    G, J = ratios.ratios.shape
    data = {"u": ratios.grid}
    if timestamps is not None:
        data["date"] = np.asarray(timestamps)[-G:]
    for j in range(1, J + 1):
        data[f"scale_{j}"] = ratios.ratios[:, j - 1]
    return pd.DataFrame(data)


def _x_axis(frame: pd.DataFrame):
    if "date" in frame.columns:
        return pd.to_datetime(frame["date"]), "date"
    return frame["u"], "rescaled time"


def save_persistence_figure(frame: pd.DataFrame, path, spans=None) -> None:
    """Stacked persistence-share lines over time (one line per scale)."""
    x, xlabel = _x_axis(frame)
    scale_cols = [c for c in frame.columns if c.startswith("scale_")]
    fig, ax = plt.subplots(figsize=(9, 4.5))
    for col in scale_cols:
        j = int(col.split("_")[1])
        ax.plot(x, frame[col], label=f"{2 ** j}-period shocks", lw=1.2)
    if spans:
        for lo, hi in spans:
            ax.axvspan(lo, hi, color="grey", alpha=0.25, lw=0)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("share of response magnitude")
    ax.set_ylim(0, 1)
    ax.legend(loc="upper right", fontsize=8, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_components_figure(frame: pd.DataFrame, path) -> None:
    """One panel per scale component plus the residual."""
    x, xlabel = _x_axis(frame)
    cols = [c for c in frame.columns if c.startswith("scale_")] + ["residual"]
    fig, axes = plt.subplots(len(cols), 1, figsize=(9, 1.6 * len(cols)), sharex=True)
    for ax, col in zip(np.atleast_1d(axes), cols):
        ax.plot(x, frame[col], lw=0.8)
        ax.set_ylabel(col, fontsize=8)
    np.atleast_1d(axes)[-1].set_xlabel(xlabel)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_forecast_figure(forecasts: pd.DataFrame, path) -> None:
    """Realised series and point forecasts, one panel per horizon."""
    horizons = sorted(forecasts["horizon"].unique())
    fig, axes = plt.subplots(
        len(horizons), 1, figsize=(9, 2.2 * len(horizons)), sharex=True
    )
    for ax, h in zip(np.atleast_1d(axes), horizons):
        sub = forecasts[forecasts["horizon"] == h]
        for model, chunk in sub.groupby("model"):
            ax.plot(chunk["target"], chunk["forecast"], lw=0.9, label=model)
        first = sub[sub["model"] == sub["model"].iloc[0]]
        ax.plot(first["target"], first["realized"], color="black", lw=0.9,
                alpha=0.6, label="realized")
        ax.set_ylabel(f"h={h}", fontsize=9)
        if h == horizons[0]:
            ax.legend(fontsize=7, ncol=3)
    np.atleast_1d(axes)[-1].set_xlabel("target index")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_relative_loss_boxplot(
    relative: pd.DataFrame, path, metric: str = "rel_rmse", baseline: str = ""
) -> None:
    """Per-asset relative losses as one box per model and horizon."""
    periods = list(relative["period"].unique())
    horizons = sorted(relative["horizon"].unique())
    fig, axes = plt.subplots(
        1, len(horizons), figsize=(3.6 * len(horizons), 4.2), sharey=True
    )
    for ax, h in zip(np.atleast_1d(axes), horizons):
        sub = relative[relative["horizon"] == h]
        labels, data, positions = [], [], []
        pos = 0
        for model in sub["model"].unique():
            for period in periods:
                vals = sub[(sub["model"] == model) & (sub["period"] == period)][
                    metric
                ].to_numpy()
                if len(vals) == 0:
                    continue
                data.append(vals)
                labels.append(model if len(periods) == 1 else f"{model}\n{period}")
                positions.append(pos)
                pos += 1
            pos += 0.5
        ax.boxplot(data, positions=positions, widths=0.7)
        ax.set_xticks(positions)
        ax.set_xticklabels(labels, fontsize=7, rotation=45, ha="right")
        ax.axhline(1.0, color="grey", lw=0.8, ls="--")
        ax.set_title(f"h={h}", fontsize=10)
    np.atleast_1d(axes)[0].set_ylabel(
        f"{metric} vs {baseline}" if baseline else metric
    )
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
