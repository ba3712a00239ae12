import numpy as np
import pandas as pd
import pytest

from tvwold.benchmarks import ArModel
from tvwold.evaluate import LossTable, evaluate, mae, rmse, rolling_forecasts
from tvwold.exceptions import DomainError, EstimationError
from tvwold.series import Panel, TimeSeries

from conftest import stable_ar1_series


class _PerfectForesight:
    """Test double that peeks at the full series it was given."""

    def __init__(self, full):
        self.full = np.asarray(full, float)

    def fit(self, values):
        return self

    def forecast(self, history, horizon):
        return float(self.full[len(history) - 1 + horizon])


class _MeanModel:
    def fit(self, values):
        self.mean = float(np.mean(values))
        return self

    def forecast(self, history, horizon):
        return self.mean


class _FailingModel:
    def fit(self, values):
        raise EstimationError("deliberately broken")


class TestLossFunctions:
    def test_closed_form(self):
        np.testing.assert_allclose(rmse([3.0, -4.0]), np.sqrt(12.5))
        assert mae([3.0, -4.0]) == 3.5

    def test_zero_errors(self):
        assert rmse(np.zeros(5)) == 0.0
        assert mae(np.zeros(5)) == 0.0

    def test_empty_rejected(self):
        with pytest.raises(DomainError):
            rmse([])
        with pytest.raises(DomainError):
            mae([])

    def test_nan_rejected(self):
        with pytest.raises(DomainError):
            rmse([1.0, np.nan])

    def test_ratio_reproduction(self):
        # a relative entry is just the toolkit quotient of two losses
        r_model, r_base = 0.983 * 2.0, 2.0
        assert r_model / r_base == pytest.approx(0.983)


class TestRollingForecasts:
    def test_origin_layout(self):
        x = stable_ar1_series(0.3, 60, seed=0)
        frame = rolling_forecasts(ArModel(1), x, 40, 2)
        assert frame["origin"].iloc[0] == 39
        assert frame["origin"].iloc[-1] == 57
        assert (frame["target"] == frame["origin"] + 2).all()
        np.testing.assert_array_equal(frame["realized"], x[frame["target"]])

    def test_no_scoreable_origin(self):
        x = stable_ar1_series(0.3, 30, seed=0)
        with pytest.raises(DomainError, match="origin"):
            rolling_forecasts(ArModel(1), x, 29, 5)

    def test_recursive_refits(self):
        x = np.concatenate([stable_ar1_series(0.2, 150, seed=1),
                            stable_ar1_series(0.8, 150, seed=2)])
        fixed = rolling_forecasts(ArModel(1), x, 150, 1, recursive=False)
        recur = rolling_forecasts(ArModel(1), x, 150, 1, recursive=True)
        assert not np.allclose(fixed["forecast"], recur["forecast"])


def _two_asset_panel(T=120, seed=0):
    return Panel({
        "a": TimeSeries(values=stable_ar1_series(0.4, T, seed=seed)),
        "b": TimeSeries(values=stable_ar1_series(0.6, T, seed=seed + 1)),
    })


class TestEvaluate:
    def test_perfect_model_zero_loss_and_ratio(self):
        x = stable_ar1_series(0.4, 100, seed=5)
        panel = Panel({"a": TimeSeries(values=x)})
        table = evaluate(
            panel,
            {"mean": lambda: _MeanModel(), "oracle": lambda: _PerfectForesight(x)},
            80, [1], baseline="mean",
        )
        oracle = table.losses[table.losses["model"] == "oracle"]
        assert oracle["rmse"].iloc[0] == 0.0
        rel = table.relative[table.relative["model"] == "oracle"]
        assert rel["rel_rmse"].iloc[0] == 0.0

    def test_identical_models_ratio_one(self):
        panel = _two_asset_panel()
        table = evaluate(
            panel,
            {"m1": lambda: _MeanModel(), "m2": lambda: _MeanModel()},
            90, [1, 3], baseline="m1",
        )
        np.testing.assert_allclose(table.relative["rel_rmse"], 1.0)
        np.testing.assert_allclose(table.relative["rel_mae"], 1.0)

    def test_scale_invariance_of_ratios(self):
        x = stable_ar1_series(0.5, 140, seed=9)
        factories = {"ar": lambda: ArModel(1), "mean": lambda: _MeanModel()}
        t1 = evaluate(Panel({"a": TimeSeries(values=x)}), factories, 100, [1],
                      baseline="mean")
        t2 = evaluate(Panel({"a": TimeSeries(values=7.0 * x)}), factories,
                      100, [1], baseline="mean")
        np.testing.assert_allclose(
            t1.relative.sort_values("model")["rel_rmse"].to_numpy(),
            t2.relative.sort_values("model")["rel_rmse"].to_numpy(),
            atol=1e-10,
        )

    def test_median_permutation_invariance(self):
        panel = _two_asset_panel(seed=3)
        reversed_panel = Panel(dict(reversed(list(panel.members.items()))))
        factories = {"ar": lambda: ArModel(1), "mean": lambda: _MeanModel()}
        t1 = evaluate(panel, factories, 90, [1], baseline="mean")
        t2 = evaluate(reversed_panel, factories, 90, [1], baseline="mean")
        pd.testing.assert_frame_equal(t1.medians, t2.medians)

    def test_failures_recorded_not_silent(self):
        panel = _two_asset_panel()
        table = evaluate(
            panel,
            {"mean": lambda: _MeanModel(), "broken": lambda: _FailingModel()},
            90, [1], baseline="mean",
        )
        assert len(table.failures) == 2
        assert all("broken" in f for f in table.failures)
        assert set(table.losses["model"]) == {"mean"}

    def test_baseline_must_be_included(self):
        with pytest.raises(DomainError, match="baseline"):
            evaluate(_two_asset_panel(), {"mean": lambda: _MeanModel()},
                     90, [1], baseline="ar")

    def test_subperiods_by_target_date(self):
        T = 120
        x = stable_ar1_series(0.4, T, seed=11)
        stamps = pd.date_range("2020-01-01", periods=T, freq="D").strftime(
            "%Y-%m-%d"
        ).to_numpy()
        panel = Panel({"a": TimeSeries(values=x, timestamps=stamps)})
        first = ("2020-01-01", "2020-04-20")
        second = ("2020-04-21", "2020-12-31")
        table = evaluate(
            panel, {"mean": lambda: _MeanModel()}, 90, [1], baseline="mean",
            subperiods={"p1": first, "p2": second},
        )
        rows = table.losses.set_index("period")
        n1 = rows.loc["p1", "n_forecasts"]
        n2 = rows.loc["p2", "n_forecasts"]
        n_full = rows.loc["full", "n_forecasts"]
        assert n1 + n2 == n_full
        # pooled identities: MAE is count-weighted, RMSE pools squares
        mae_pooled = (rows.loc["p1", "mae"] * n1 + rows.loc["p2", "mae"] * n2) / n_full
        np.testing.assert_allclose(mae_pooled, rows.loc["full", "mae"])
        rmse_pooled = np.sqrt(
            (rows.loc["p1", "rmse"] ** 2 * n1 + rows.loc["p2", "rmse"] ** 2 * n2)
            / n_full
        )
        np.testing.assert_allclose(rmse_pooled, rows.loc["full", "rmse"])

    def test_subperiod_needs_timestamps(self):
        panel = _two_asset_panel()
        table_err = pytest.raises(
            DomainError,
            evaluate,
            panel, {"mean": lambda: _MeanModel()}, 90, [1],
            baseline="mean", subperiods={"p": ("2020-01-01", "2020-02-01")},
        )
        assert "timestamp" in str(table_err.value)

    def test_summary_md_renders(self):
        table = evaluate(_two_asset_panel(),
                         {"ar": lambda: ArModel(1), "mean": lambda: _MeanModel()},
                         90, [1], baseline="mean")
        md = table.summary_md()
        assert "| model |" in md and "ar" in md and "full" in md
