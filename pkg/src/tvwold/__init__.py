"""Time-varying scale decomposition and forecasting for locally stationary
series.

The toolkit estimates smoothly varying AR dynamics by local linear kernel
regression, inverts them into time-varying impulse responses, splits a
series into orthogonal components at dyadic persistence scales, and
forecasts by recombining trend and per-scale predictions.  A CLI
(``tvwold``) wires CSV ingestion, the benchmark suite and report/figure
emission.
"""

__version__ = "0.1.0"

from .exceptions import DomainError, EstimationError, TvWoldError
from .series import (
    Panel,
    SampleSplit,
    TimeSeries,
    log_difference,
    read_panel_csv,
    read_series_csv,
    split,
)
from .kernels import Kernel, get_kernel
from .local_linear import (
    TrendFit,
    TvArFit,
    cross_validate_bandwidth,
    cross_validate_trend_bandwidth,
    estimate_trend,
    estimate_tvar,
    fit_tvp_ar,
)
from .wold import MaRepresentation, ar_to_ma
from .decompose import (
    PersistenceRatios,
    ScaleDecomposition,
    decompose,
    haar_detail_shocks,
    haar_lowpass_shocks,
    lowpass_gammas,
    persistence_ratios,
    residual_component,
    scale_betas,
    scale_components,
)
from .forecast import (
    ForecastConfig,
    ScaleWeights,
    TvEwdForecaster,
    expected_detail_shock,
    fit_weights,
    forecast_scale,
    forecast_trend,
)
from .benchmarks import ArModel, EwdModel, HarModel, TvArModel, TvHarModel, make_model
from .evaluate import LossTable, evaluate, mae, rmse, rolling_forecasts
from .simulate import (
    TvArDgp,
    dgp_a,
    dgp_b,
    dgp_c,
    simulate,
    simulate_preset,
)

__all__ = [name for name in dir() if not name.startswith("_")]
