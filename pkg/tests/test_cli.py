import json

import numpy as np
import pandas as pd
import pytest

from tvwold.cli import main


@pytest.fixture
def sim_csv(tmp_path):
    rc = main(["simulate", "--dgp", "a", "--t", "700", "--seed", "4",
               "--out-dir", str(tmp_path / "sim")])
    assert rc == 0
    return tmp_path / "sim" / "simulated.csv"


def _decompose_args(sim_csv, out):
    return ["decompose", str(sim_csv), "--scales", "4", "--lags", "2",
            "--kmax", "6", "--n-trunc", "256", "--out-dir", str(out)]


class TestSimulate:
    def test_writes_csv_and_manifest(self, tmp_path):
        out = tmp_path / "s"
        rc = main(["simulate", "--dgp", "a", "--t", "300", "--seed", "1",
                   "--out-dir", str(out)])
        assert rc == 0
        frame = pd.read_csv(out / "simulated.csv")
        assert list(frame.columns) == ["date", "value"]
        assert len(frame) == 300
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "simulate"
        assert manifest["version"]

    def test_deterministic_bytes(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert main(["simulate", "--dgp", "b", "--t", "250", "--seed",
                         "7", "--out-dir", str(out)]) == 0
        assert (a / "simulated.csv").read_bytes() == (b / "simulated.csv").read_bytes()


class TestDecompose:
    def test_outputs(self, sim_csv, tmp_path):
        out = tmp_path / "dec"
        assert main(_decompose_args(sim_csv, out)) == 0
        ratios = pd.read_csv(out / "ratios.csv")
        scale_cols = [c for c in ratios.columns if c.startswith("scale_")]
        assert len(scale_cols) == 4
        sums = ratios[scale_cols].dropna().sum(axis=1)
        np.testing.assert_allclose(sums, 1.0, atol=1e-8)
        beta = pd.read_csv(out / "beta.csv")
        assert set(beta.columns) == {"u", "scale", "shift", "beta"}
        assert beta["scale"].max() == 4
        assert beta["shift"].max() == 5
        comps = pd.read_csv(out / "components.csv")
        assert "residual" in comps.columns and "reconstruction" in comps.columns
        assert (out / "ratios.png").exists()
        assert (out / "components.png").exists()

    def test_no_figures(self, sim_csv, tmp_path):
        out = tmp_path / "dec2"
        assert main(_decompose_args(sim_csv, out) + ["--no-figures"]) == 0
        assert not (out / "ratios.png").exists()

    def test_manifest_records_parameters(self, sim_csv, tmp_path):
        out = tmp_path / "dec3"
        assert main(_decompose_args(sim_csv, out)) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["parameters"]["scales"] == 4
        assert manifest["parameters"]["kmax"] == 6
        assert "diagnostics" in manifest["parameters"]

    def test_bandwidth_cv_recorded(self, sim_csv, tmp_path):
        out = tmp_path / "dec4"
        rc = main(_decompose_args(sim_csv, out) + ["--bandwidth-cv"])
        assert rc == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert "ma_bw_cv_selected" in manifest["parameters"]

    def test_deterministic_outputs(self, sim_csv, tmp_path):
        outs = []
        for tag in ("r1", "r2"):
            out = tmp_path / tag
            assert main(_decompose_args(sim_csv, out)) == 0
            outs.append((out / "beta.csv").read_bytes())
        assert outs[0] == outs[1]


class TestForecastCommand:
    def test_forecasts_csv_schema(self, sim_csv, tmp_path):
        out = tmp_path / "fc"
        rc = main(["forecast", str(sim_csv), "--horizon", "1,3",
                   "--split", "600", "--scales", "4", "--lags", "2",
                   "--kmax", "6", "--n-trunc", "256", "--out-dir", str(out)])
        assert rc == 0
        frame = pd.read_csv(out / "forecasts.csv")
        assert list(frame.columns) == ["origin", "horizon", "model",
                                       "forecast", "realized", "target"]
        assert set(frame["horizon"]) == {1, 3}
        assert (frame["model"] == "tvewd").all()
        h1 = frame[frame["horizon"] == 1]
        assert len(h1) == 700 - 600  # origins 599..698 target 600..699
        assert (out / "forecasts.png").exists()


class TestBenchmarkCommand:
    def test_losses_and_summary(self, sim_csv, tmp_path):
        out = tmp_path / "bm"
        rc = main(["benchmark", str(sim_csv), "--models", "ar3,har,tvewd",
                   "--split", "600", "--horizon", "1", "--baseline", "ar3",
                   "--scales", "4", "--lags", "2", "--kmax", "6",
                   "--n-trunc", "256", "--out-dir", str(out)])
        assert rc == 0
        med = pd.read_csv(out / "losses_median.csv")
        base_row = med[med["model"] == "ar3"]
        np.testing.assert_allclose(base_row["rel_rmse"], 1.0)
        assert set(med["model"]) == {"ar3", "har", "tvewd"}
        assert (out / "summary.md").exists()
        assert (out / "relative_losses.png").exists()
        assert (out / "losses.csv").exists()
        assert (out / "losses_relative.csv").exists()

    def test_identical_models_ratio_one(self, sim_csv, tmp_path):
        out = tmp_path / "bm2"
        rc = main(["benchmark", str(sim_csv), "--models", "ar3,ar3",
                   "--split", "600", "--horizon", "1", "--baseline", "ar3",
                   "--out-dir", str(out)])
        assert rc == 0
        med = pd.read_csv(out / "losses_median.csv")
        np.testing.assert_allclose(med["rel_rmse"], 1.0)

    def test_subperiod_flag(self, sim_csv, tmp_path):
        out = tmp_path / "bm3"
        rc = main(["benchmark", str(sim_csv), "--models", "ar1,har",
                   "--split", "600", "--horizon", "1", "--baseline", "ar1",
                   "--subperiod", "late=2001-06-01:2002-12-31",
                   "--out-dir", str(out)])
        assert rc == 0
        med = pd.read_csv(out / "losses_median.csv")
        assert set(med["period"]) == {"full", "late"}


class TestExitCodes:
    def test_missing_input_is_config_error(self, tmp_path):
        rc = main(["decompose", str(tmp_path / "nope.csv"),
                   "--out-dir", str(tmp_path / "o")])
        assert rc == 2

    def test_bad_horizon_is_config_error(self, sim_csv, tmp_path):
        rc = main(["forecast", str(sim_csv), "--horizon", "zero",
                   "--split", "600", "--out-dir", str(tmp_path / "o")])
        assert rc == 2

    def test_bad_subperiod_is_config_error(self, sim_csv, tmp_path):
        rc = main(["benchmark", str(sim_csv), "--models", "ar1",
                   "--baseline", "ar1", "--split", "600",
                   "--subperiod", "oops",
                   "--out-dir", str(tmp_path / "o")])
        assert rc == 2

    def test_estimation_failure_is_runtime_error(self, tmp_path):
        # migrating-persistence data whose boundary AR estimate crosses the
        # unit circle: an estimation failure unless explicitly allowed
        sim = tmp_path / "sim"
        assert main(["simulate", "--dgp", "b", "--t", "700", "--seed", "4",
                     "--out-dir", str(sim)]) == 0
        args = ["decompose", str(sim / "simulated.csv"), "--scales", "4",
                "--lags", "2", "--kmax", "6", "--n-trunc", "256"]
        rc = main(args + ["--out-dir", str(tmp_path / "o")])
        assert rc == 1
        rc = main(args + ["--allow-nonstationary-points",
                          "--out-dir", str(tmp_path / "o2")])
        assert rc == 0

    def test_panel_needs_asset_choice(self, tmp_path):
        p = tmp_path / "panel.csv"
        dates = pd.date_range("2020-01-01", periods=300, freq="D")
        g = np.random.default_rng(0)
        pd.DataFrame({
            "date": dates.strftime("%Y-%m-%d"),
            "a": g.standard_normal(300),
            "b": g.standard_normal(300),
        }).to_csv(p, index=False)
        rc = main(["decompose", str(p), "--scales", "3", "--lags", "1",
                   "--kmax", "4", "--n-trunc", "64",
                   "--out-dir", str(tmp_path / "o")])
        assert rc == 2
        rc = main(["decompose", str(p), "--asset", "a", "--scales", "3",
                   "--lags", "1", "--kmax", "4", "--n-trunc", "64",
                   "--out-dir", str(tmp_path / "o2")])
        assert rc == 0


class TestPresets:
    def test_inflation_preset_decompose(self, tmp_path):
        sim = tmp_path / "sim"
        assert main(["simulate", "--dgp", "a", "--t", "781", "--seed", "2",
                     "--out-dir", str(sim)]) == 0
        out = tmp_path / "dec"
        rc = main(["decompose", str(sim / "simulated.csv"),
                   "--preset", "inflation-pce", "--out-dir", str(out)])
        assert rc == 0
        ratios = pd.read_csv(out / "ratios.csv")
        assert len([c for c in ratios.columns if c.startswith("scale_")]) == 5
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["parameters"]["trend_bw"] == 0.6
        assert manifest["parameters"]["ma_bw"] == 0.2

    def test_panel_benchmark_multiasset(self, tmp_path):
        p = tmp_path / "panel.csv"
        dates = pd.date_range("2015-01-01", periods=400, freq="D")
        g = np.random.default_rng(3)
        cols = {"date": dates.strftime("%Y-%m-%d")}
        for name in ("x1", "x2", "x3"):
            v = np.abs(g.standard_normal(400)) + 0.5
            cols[name] = v
        pd.DataFrame(cols).to_csv(p, index=False)
        out = tmp_path / "bm"
        rc = main(["benchmark", str(p), "--models", "ar1,har",
                   "--split", "300", "--horizon", "1", "--baseline", "ar1",
                   "--out-dir", str(out)])
        assert rc == 0
        rel = pd.read_csv(out / "losses_relative.csv")
        assert set(rel["asset"]) == {"x1", "x2", "x3"}
        med = pd.read_csv(out / "losses_median.csv")
        assert len(med[med["model"] == "har"]) == 1
