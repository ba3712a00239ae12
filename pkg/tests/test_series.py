import numpy as np
import pytest

from tvwold.exceptions import DomainError
from tvwold.series import (
    Panel,
    SampleSplit,
    TimeSeries,
    log_difference,
    read_panel_csv,
    read_series_csv,
    split,
)


class TestTimeSeries:
    def test_basic_construction(self):
        ts = TimeSeries(values=[1.0, 2.0, 3.0], frequency_label="monthly")
        assert len(ts) == 3
        np.testing.assert_array_equal(ts.index, [0, 1, 2])

    def test_rejects_nan(self):
        with pytest.raises(DomainError, match="non-finite"):
            TimeSeries(values=[1.0, np.nan, 3.0])

    def test_rejects_inf(self):
        with pytest.raises(DomainError):
            TimeSeries(values=[1.0, np.inf])

    def test_rejects_empty(self):
        with pytest.raises(DomainError, match="nonempty"):
            TimeSeries(values=[])

    def test_rejects_nonincreasing_index(self):
        with pytest.raises(DomainError, match="strictly increasing"):
            TimeSeries(values=[1.0, 2.0], index=[3, 3])

    def test_values_read_only(self):
        ts = TimeSeries(values=[1.0, 2.0])
        with pytest.raises(ValueError):
            ts.values[0] = 9.0

    def test_rescaled_times(self):
        ts = TimeSeries(values=np.arange(4.0))
        np.testing.assert_allclose(ts.rescaled_times, [0.25, 0.5, 0.75, 1.0])


class TestSplit:
    @pytest.mark.parametrize(
        "T,m,out_len",
        [(781, 645, 136), (10, 9, 1), (3278, 1000, 2278)],
    )
    def test_out_sample_lengths(self, T, m, out_len):
        ts = TimeSeries(values=np.arange(T, dtype=float))
        left, right = split(ts, m)
        assert len(left) == m
        assert len(right) == out_len

    def test_concat_reproduces_input(self, rng):
        for _ in range(20):
            T = int(rng.integers(5, 200))
            m = int(rng.integers(1, T))
            ts = TimeSeries(values=rng.normal(size=T))
            left, right = split(ts, m)
            np.testing.assert_array_equal(
                np.concatenate([left.values, right.values]), ts.values
            )
            np.testing.assert_array_equal(
                np.concatenate([left.index, right.index]), ts.index
            )

    @pytest.mark.parametrize("m", [0, 10, 11, -1])
    def test_out_of_range(self, m):
        ts = TimeSeries(values=np.arange(10, dtype=float))
        with pytest.raises(DomainError, match="1 <= m < T"):
            split(ts, m)


class TestLogDifference:
    def test_closed_form(self):
        ts = TimeSeries(values=[1.0, np.e, np.e])
        out = log_difference(ts)
        np.testing.assert_allclose(out.values, [1.0, 0.0], atol=1e-14)

    def test_constant_series(self):
        ts = TimeSeries(values=np.full(50, 7.3))
        np.testing.assert_allclose(log_difference(ts).values, 0.0, atol=1e-14)

    def test_hand_value(self):
        out = log_difference(TimeSeries(values=[100.0, 110.0, 110.0]))
        np.testing.assert_allclose(out.values[0], 0.09531, atol=5e-6)

    def test_exponential_trend_is_constant(self):
        t = np.arange(1, 80)
        ts = TimeSeries(values=np.exp(0.03 * t))
        np.testing.assert_allclose(log_difference(ts).values, 0.03, atol=1e-12)

    def test_nonpositive_rejected_with_index(self):
        with pytest.raises(DomainError, match="position 2"):
            log_difference(TimeSeries(values=[1.0, 2.0, -3.0, 4.0]))

    def test_length(self):
        ts = TimeSeries(values=np.arange(1.0, 11.0))
        assert len(log_difference(ts)) == 9


class TestSampleSplit:
    def test_total(self):
        s = SampleSplit(in_sample_len=645, out_sample_len=136)
        assert s.total_len == 781

    def test_rejects_nonpositive(self):
        with pytest.raises(DomainError):
            SampleSplit(in_sample_len=0, out_sample_len=5)


class TestCsvIngestion:
    def test_two_column_layout(self, tmp_path):
        p = tmp_path / "series.csv"
        p.write_text("date,value\n2020-01-01,1.5\n2020-02-01,2.5\n2020-03-01,3.5\n")
        ts = read_series_csv(p, frequency_label="monthly")
        np.testing.assert_allclose(ts.values, [1.5, 2.5, 3.5])
        assert ts.timestamps[0] == "2020-01-01"
        assert ts.frequency_label == "monthly"

    def test_wide_panel_layout(self, tmp_path):
        p = tmp_path / "panel.csv"
        p.write_text(
            "date,aaa,bbb\n"
            "2020-01-01,1.0,9.0\n2020-01-02,2.0,8.0\n2020-01-03,3.0,7.0\n"
        )
        panel = read_panel_csv(p)
        assert sorted(panel.members) == ["aaa", "bbb"]
        np.testing.assert_allclose(panel["bbb"].values, [9.0, 8.0, 7.0])

    def test_ragged_panel_trims_edges(self, tmp_path):
        p = tmp_path / "panel.csv"
        p.write_text(
            "date,aaa,bbb\n"
            "2020-01-01,1.0,\n2020-01-02,2.0,8.0\n2020-01-03,3.0,7.0\n"
        )
        panel = read_panel_csv(p)
        assert len(panel["aaa"]) == 3
        assert len(panel["bbb"]) == 2

    def test_interior_gap_rejected(self, tmp_path):
        p = tmp_path / "series.csv"
        p.write_text("date,value\n2020-01-01,1.0\n2020-01-02,\n2020-01-03,3.0\n")
        with pytest.raises(DomainError, match="missing value"):
            read_series_csv(p)

    def test_wrong_column_count(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("date\n2020-01-01\n")
        with pytest.raises(DomainError, match="expected 2 columns"):
            read_series_csv(p)


class TestPanel:
    def test_empty_rejected(self):
        with pytest.raises(DomainError):
            Panel(members={})

    def test_iteration(self):
        panel = Panel({"x": TimeSeries(values=[1.0, 2.0])})
        assert [name for name, _ in panel] == ["x"]
