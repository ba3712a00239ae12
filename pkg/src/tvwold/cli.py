"""Command-line interface: simulate, decompose, forecast and benchmark.

Every run writes a ``manifest.json`` with the effective parameters
(including any cross-validated bandwidths) next to its outputs, so a run
can be reproduced exactly from the manifest alone.  Exit codes: 0 success,
1 runtime estimation failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .benchmarks import MODEL_NAMES, make_model
from .decompose import persistence_ratios
from .evaluate import evaluate, rolling_forecasts
from .exceptions import TvWoldError
from .forecast import ForecastConfig, TvEwdForecaster
from .kernels import KERNEL_NAMES, get_kernel
from .local_linear import (
    cross_validate_bandwidth,
    cross_validate_trend_bandwidth,
    estimate_trend,
)
from .report import (
    beta_frame,
    components_frame,
    ratios_frame,
    save_components_figure,
    save_forecast_figure,
    save_persistence_figure,
    save_relative_loss_boxplot,
)
from .series import Panel, TimeSeries, read_panel_csv, read_series_csv
from .simulate import DGP_NAMES, simulate_preset

PRESETS = {
    "inflation-pce": {
        "scales": 5,
        "lags": 2,
        "trend_bw": 0.6,
        "ma_bw": 0.2,
        "split": 645,
        "horizons": [1, 2, 6, 12],
        "baseline": "ar3",
        "models": ["ar3", "ewd", "tvar3", "tvhar", "tvewd"],
        "kmax": 8,
        "n_trunc": 512,
        "kernel": "epanechnikov",
    },
    "rv-sp500": {
        "trend_bw": 0.2,
        "ma_bw": 0.2,
        "split": 1000,
        "horizons": [1, 5, 22],
        "baseline": "har",
        "models": ["har", "ewd", "tvar3", "tvhar", "tvewd"],
        # kmax left unset: the sample-feasible default applies per horizon
        "kernel": "epanechnikov",
        # horizon-specific decomposition sizes (scales, lags)
        "horizon_params": {1: (5, 2), 5: (5, 5), 22: (7, 15)},
    },
}


def _add_common(p):
    p.add_argument("--out-dir", default="tvwold-out", help="output directory")
    p.add_argument("--figures", dest="figures", action="store_true", default=True,
                   help="render figures next to the CSV output (default)")
    p.add_argument("--no-figures", dest="figures", action="store_false")


def _add_estimation(p):
    p.add_argument("--preset", choices=sorted(PRESETS), help="named configuration")
    p.add_argument("--scales", type=int, default=None, help="number of dyadic scales J")
    p.add_argument("--lags", type=int, default=None, help="autoregressive lag order")
    p.add_argument("--bandwidth", type=float, default=None,
                   help="set both bandwidths at once (overridden by the specific flags)")
    p.add_argument("--trend-bw", type=float, default=None, help="trend bandwidth")
    p.add_argument("--ma-bw", type=float, default=None, help="AR-curve bandwidth")
    p.add_argument("--kernel", choices=KERNEL_NAMES, default=None)
    p.add_argument("--kmax", type=int, default=None, help="shifts per scale")
    p.add_argument("--n-trunc", type=int, default=None, help="MA truncation length")
    p.add_argument("--bandwidth-cv", action="store_true",
                   help="cross-validate the AR-curve bandwidth")
    p.add_argument("--trend-bandwidth-cv", action="store_true",
                   help="cross-validate the trend bandwidth")
    p.add_argument("--grid-points", type=int, default=None,
                   help="coarse evaluation grid size (default: every observation)")
    p.add_argument("--allow-nonstationary-points", action="store_true",
                   help="flag and clamp explosive local AR fits instead of failing")
    p.add_argument("--asset", default=None, help="column to use from a panel CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tvwold",
        description="Time-varying scale decomposition and forecasting toolkit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate a synthetic series")
    p_sim.add_argument("--dgp", choices=DGP_NAMES, default="a")
    p_sim.add_argument("--t", type=int, default=1500, help="number of observations")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", default=None, help="output CSV (default <out-dir>/simulated.csv)")
    _add_common(p_sim)

    p_dec = sub.add_parser("decompose", help="scale decomposition of one series")
    p_dec.add_argument("input", help="CSV file (date,value or wide panel)")
    p_dec.add_argument("--k-ref", type=int, default=1,
                       help="shift at which persistence ratios are computed")
    _add_estimation(p_dec)
    _add_common(p_dec)

    p_fc = sub.add_parser("forecast", help="out-of-sample forecasts")
    p_fc.add_argument("input", help="CSV file (date,value or wide panel)")
    p_fc.add_argument("--horizon", default=None,
                      help="comma-separated forecast horizons, e.g. 1,5,22")
    p_fc.add_argument("--split", type=int, default=None, help="in-sample length")
    p_fc.add_argument("--recursive", action="store_true",
                      help="refit at every origin instead of freezing parameters")
    _add_estimation(p_fc)
    _add_common(p_fc)

    p_bm = sub.add_parser("benchmark", help="compare models on one split")
    p_bm.add_argument("input", help="CSV file (date,value or wide panel)")
    p_bm.add_argument("--models", default=None,
                      help=f"comma-separated subset of {','.join(MODEL_NAMES)}")
    p_bm.add_argument("--horizon", default=None, help="comma-separated horizons")
    p_bm.add_argument("--split", type=int, default=None, help="in-sample length")
    p_bm.add_argument("--baseline", default=None, help="denominator model")
    p_bm.add_argument("--recursive", action="store_true")
    p_bm.add_argument("--subperiod", action="append", default=[],
                      metavar="LABEL=START:END",
                      help="extra evaluation window by target date, repeatable")
    _add_estimation(p_bm)
    _add_common(p_bm)
    return parser


def _preset_value(args, key, preset, default):
    cli_value = getattr(args, key.replace("-", "_"), None)
    if cli_value is not None:
        return cli_value
    if preset and key in preset:
        return preset[key]
    return default


def _load_input(path: str, asset):
    path = Path(path)
    if not path.exists():
        raise _ConfigError(f"input file not found: {path}")
    head = pd.read_csv(path, nrows=1)
    if head.shape[1] == 2:
        return read_series_csv(path)
    panel = read_panel_csv(path)
    if asset is not None:
        if asset not in panel.members:
            raise _ConfigError(
                f"asset {asset!r} not in panel columns {sorted(panel.members)}"
            )
        return panel[asset]
    return panel


class _ConfigError(Exception):
    pass


def _require_series(data, asset_flag="--asset"):
    if isinstance(data, Panel):
        if len(data) == 1:
            return next(iter(data))[1]
        raise _ConfigError(
            f"input is a panel with {len(data)} columns; pick one with {asset_flag}"
        )
    return data


def _write_manifest(out_dir: Path, command: str, params: dict, outputs: list):
    manifest = {
        "tool": "tvwold",
        "version": __version__,
        "command": command,
        "parameters": params,
        "outputs": sorted(outputs),
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str))
    return path


def _resolve_estimation(args, series_len: int):
    """Merge CLI flags, preset values and defaults into one parameter dict."""
    preset = PRESETS.get(args.preset) if getattr(args, "preset", None) else None
    both = getattr(args, "bandwidth", None)

    def pick_bw(key, fallback):
        explicit = getattr(args, key, None)
        if explicit is not None:
            return explicit
        if both is not None:
            return both
        if preset and key in preset:
            return preset[key]
        return fallback

    params = {
        "preset": getattr(args, "preset", None),
        "scales": _preset_value(args, "scales", preset, 5),
        "lags": _preset_value(args, "lags", preset, 2),
        "trend_bw": pick_bw("trend_bw", 0.6),
        "ma_bw": pick_bw("ma_bw", 0.2),
        "kernel": _preset_value(args, "kernel", preset, "epanechnikov"),
        "kmax": _preset_value(args, "kmax", preset, None),
        "n_trunc": _preset_value(args, "n_trunc", preset, None),
        "grid_points": getattr(args, "grid_points", None),
        "allow_nonstationary": getattr(args, "allow_nonstationary_points", False),
    }
    if preset and "horizon_params" in preset:
        params["horizon_params"] = preset["horizon_params"]
    if params["scales"] < 1 or params["lags"] < 1:
        raise _ConfigError("--scales and --lags must be positive")
    if series_len <= 10 * params["lags"]:
        raise _ConfigError(
            f"series too short ({series_len}) for {params['lags']} lags"
        )
    return params


def _maybe_cv(args, series_values, params):
    """Cross-validate bandwidths when requested; record selections."""
    kernel = get_kernel(params["kernel"])
    if getattr(args, "trend_bandwidth_cv", False):
        params["trend_bw"] = cross_validate_trend_bandwidth(series_values, kernel)
        params["trend_bw_cv_selected"] = params["trend_bw"]
    if getattr(args, "bandwidth_cv", False):
        _, centered = estimate_trend(series_values, kernel, params["trend_bw"])
        params["ma_bw"] = cross_validate_bandwidth(
            centered, params["lags"], kernel
        )
        params["ma_bw_cv_selected"] = params["ma_bw"]
    return params


def _forecast_config(params, horizon=1, scales=None, lags=None):
    return ForecastConfig(
        n_scales=scales or params["scales"],
        ar_lags=lags or params["lags"],
        horizon=horizon,
        trend_bandwidth=params["trend_bw"],
        ma_bandwidth=params["ma_bw"],
        kernel=params["kernel"],
        n_shifts=params["kmax"],
        truncation=params["n_trunc"],
        allow_nonstationary=params["allow_nonstationary"],
        grid_points=params["grid_points"],
    )


def _parse_horizons(raw, default):
    if raw is None:
        return list(default)
    try:
        horizons = sorted({int(tok) for tok in str(raw).split(",") if tok.strip()})
    except ValueError:
        raise _ConfigError(f"invalid horizon list {raw!r}")
    if not horizons or any(h < 1 for h in horizons):
        raise _ConfigError(f"horizons must be positive integers, got {raw!r}")
    return horizons


def _parse_subperiods(raw_list):
    out = {}
    for item in raw_list:
        try:
            label, window = item.split("=", 1)
            start, end = window.split(":", 1)
            out[label] = (start, end)
        except ValueError:
            raise _ConfigError(
                f"bad --subperiod {item!r}; expected LABEL=START:END"
            )
    return out or None


# -- subcommand bodies ------------------------------------------------------


def _cmd_simulate(args, out_dir: Path) -> list:
    series = simulate_preset(args.dgp, args.t, args.seed)
    dates = pd.date_range("2000-01-01", periods=len(series), freq="D")
    frame = pd.DataFrame({"date": dates.strftime("%Y-%m-%d"),
                          "value": series.values})
    out = Path(args.out) if args.out else out_dir / "simulated.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(out, index=False)
    return [str(out)]


def _cmd_decompose(args, out_dir: Path) -> list:
    series = _require_series(_load_input(args.input, args.asset))
    params = _resolve_estimation(args, len(series))
    params = _maybe_cv(args, series.values, params)
    cfg = _forecast_config(params)
    forecaster = TvEwdForecaster(cfg).fit(series.values)
    dec = forecaster.decomposition
    if not 0 <= args.k_ref < dec.n_shifts:
        raise _ConfigError(f"--k-ref must lie in [0, {dec.n_shifts})")
    ratios = persistence_ratios(dec.beta, dec.grid, k_ref=args.k_ref)
    stamps = series.timestamps
    outputs = []

    bframe = beta_frame(dec)
    cframe = components_frame(dec, stamps)
    rframe = ratios_frame(ratios, stamps)
    for name, frame in (("beta.csv", bframe), ("components.csv", cframe),
                        ("ratios.csv", rframe)):
        path = out_dir / name
        frame.to_csv(path, index=False)
        outputs.append(str(path))
    if args.figures:
        fig_path = out_dir / "ratios.png"
        save_persistence_figure(rframe, fig_path)
        outputs.append(str(fig_path))
        comp_path = out_dir / "components.png"
        save_components_figure(cframe, comp_path)
        outputs.append(str(comp_path))
    params["k_ref"] = args.k_ref
    params["diagnostics"] = forecaster.diagnostics
    args._manifest_params = params
    return outputs


def _split_default(params, args, T):
    split = getattr(args, "split", None)
    if split is None and args.preset:
        split = PRESETS[args.preset].get("split")
    if split is None:
        split = int(T * 0.7)
    if not 1 <= split < T:
        raise _ConfigError(f"--split {split} must satisfy 1 <= m < T={T}")
    return split


def _cmd_forecast(args, out_dir: Path) -> list:
    series = _require_series(_load_input(args.input, args.asset))
    T = len(series)
    params = _resolve_estimation(args, T)
    split = _split_default(params, args, T)
    horizons = _parse_horizons(args.horizon,
                               PRESETS.get(args.preset, {}).get("horizons", [1])
                               if args.preset else [1])
    params = _maybe_cv(args, series.values[:split], params)
    params.update({"split": split, "horizons": horizons,
                   "recursive": args.recursive})
    horizon_params = params.get("horizon_params", {})
    frames = []
    for h in horizons:
        hp = horizon_params.get(h)
        cfg = _forecast_config(params, horizon=h,
                               scales=hp[0] if hp else None,
                               lags=hp[1] if hp else None)
        model = TvEwdForecaster(cfg)
        frame = rolling_forecasts(model, series, split, h,
                                  recursive=args.recursive)
        frame.insert(0, "model", "tvewd")
        frame.insert(0, "horizon", h)
        frames.append(frame)
    result = pd.concat(frames, ignore_index=True)
    result = result[["origin", "horizon", "model", "forecast", "realized",
                     "target"]]
    out = out_dir / "forecasts.csv"
    result.to_csv(out, index=False)
    outputs = [str(out)]
    if args.figures:
        fig = out_dir / "forecasts.png"
        save_forecast_figure(result, fig)
        outputs.append(str(fig))
    args._manifest_params = params
    return outputs


def _cmd_benchmark(args, out_dir: Path) -> list:
    data = _load_input(args.input, args.asset)
    if isinstance(data, TimeSeries):
        panel = Panel({"series": data})
    else:
        panel = data
    T = min(len(s) for _, s in panel)
    params = _resolve_estimation(args, T)
    split = _split_default(params, args, T)
    preset = PRESETS.get(args.preset, {}) if args.preset else {}
    horizons = _parse_horizons(args.horizon, preset.get("horizons", [1, 5, 22]))
    model_names = (
        [m.strip() for m in args.models.split(",")]
        if args.models
        else preset.get("models", ["ar3", "har", "ewd", "tvewd"])
    )
    baseline = args.baseline or preset.get("baseline", model_names[0])
    if baseline not in model_names:
        raise _ConfigError(f"baseline {baseline!r} not among models {model_names}")
    subperiods = _parse_subperiods(args.subperiod)
    first = next(iter(panel))[1]
    params = _maybe_cv(args, first.values[:split], params)
    params.update({"split": split, "horizons": horizons, "models": model_names,
                   "baseline": baseline, "recursive": args.recursive})
    horizon_params = params.get("horizon_params", {})

    def factories_for(h):
        hp = horizon_params.get(h)
        out = {}
        for name in model_names:
            if name == "tvewd":
                cfg = _forecast_config(params, horizon=h,
                                       scales=hp[0] if hp else None,
                                       lags=hp[1] if hp else None)
                out[name] = lambda cfg=cfg: TvEwdForecaster(cfg)
            elif name == "ewd":
                out[name] = lambda hp=hp: make_model(
                    "ewd",
                    n_scales=hp[0] if hp else params["scales"],
                    ar_lags=hp[1] if hp else params["lags"],
                    n_shifts=params["kmax"],
                    truncation=params["n_trunc"],
                )
            else:
                out[name] = lambda name=name: make_model(name)
        return out

    tables = []
    for h in horizons:
        tables.append(
            evaluate(panel, factories_for(h), split, [h], baseline,
                     recursive=args.recursive, subperiods=subperiods,
                     keep_forecasts=True)
        )
    losses = pd.concat([t.losses for t in tables], ignore_index=True)
    relative = pd.concat([t.relative for t in tables], ignore_index=True)
    medians = pd.concat([t.medians for t in tables], ignore_index=True)
    medians = medians.sort_values(["period", "model", "horizon"],
                                  ignore_index=True)
    failures = [f for t in tables for f in t.failures]
    forecasts = pd.concat(
        [t.forecasts for t in tables if t.forecasts is not None],
        ignore_index=True,
    ) if any(t.forecasts is not None for t in tables) else None

    from .evaluate import LossTable

    table = LossTable(losses=losses, relative=relative, medians=medians,
                      baseline=baseline, failures=failures, forecasts=forecasts)
    outputs = []
    for name, frame in (
        ("losses.csv", table.losses),
        ("losses_relative.csv", table.relative),
        ("losses_median.csv", table.medians),
    ):
        path = out_dir / name
        frame.to_csv(path, index=False)
        outputs.append(str(path))
    summary = out_dir / "summary.md"
    summary.write_text(table.summary_md())
    outputs.append(str(summary))
    if table.forecasts is not None:
        fpath = out_dir / "forecasts.csv"
        table.forecasts.to_csv(fpath, index=False)
        outputs.append(str(fpath))
    if args.figures:
        fig = out_dir / "relative_losses.png"
        save_relative_loss_boxplot(table.relative, fig, baseline=baseline)
        outputs.append(str(fig))
    if failures:
        params["excluded"] = failures
    args._manifest_params = params
    return outputs


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out_dir = Path(args.out_dir)
    bodies = {
        "simulate": _cmd_simulate,
        "decompose": _cmd_decompose,
        "forecast": _cmd_forecast,
        "benchmark": _cmd_benchmark,
    }
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        outputs = bodies[args.command](args, out_dir)
    except _ConfigError as exc:
        print(f"tvwold: configuration error: {exc}", file=sys.stderr)
        return 2
    except TvWoldError as exc:
        print(f"tvwold [{args.command}]: {exc}", file=sys.stderr)
        return 1
    params = getattr(args, "_manifest_params", None) or {
        k: v for k, v in vars(args).items()
        if not k.startswith("_") and k not in ("command",)
    }
    manifest = _write_manifest(out_dir, args.command, _jsonable(params), outputs)
    for line in outputs + [str(manifest)]:
        print(line)
    return 0


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


if __name__ == "__main__":
    sys.exit(main())
