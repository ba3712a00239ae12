"""Series containers, sample splits and CSV ingestion.

Integer positions are the canonical index everywhere; timestamps, when
present, are carried along as display metadata only.  Missing values are
rejected at ingestion and never imputed: every downstream estimator assumes
a gapless grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd

from .exceptions import DomainError

__all__ = [
    "TimeSeries",
    "Panel",
    "SampleSplit",
    "split",
    "log_difference",
    "read_series_csv",
    "read_panel_csv",
]


@dataclass(frozen=True)
class TimeSeries:
    """One observed real-valued series on a gapless grid.

    Parameters
    ----------
    values : array_like
        Finite observations, length >= 2.
    index : array_like, optional
        Strictly increasing positions, same length as ``values``.  Defaults
        to ``0..T-1``.
    timestamps : sequence, optional
        Display metadata (e.g. ISO dates), same length as ``values``.
    frequency_label : str
        Free-text sampling frequency, e.g. ``"monthly"``.
    """

    values: np.ndarray
    index: np.ndarray = None
    timestamps: Optional[np.ndarray] = None
    frequency_label: str = ""

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1:
            raise DomainError(f"values must be 1-d, got shape {values.shape}")
        # length-1 fragments arise from boundary splits; estimators enforce
        # their own stricter minima
        if len(values) < 1:
            raise DomainError("series must be nonempty")
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise DomainError(f"non-finite value at position {bad}")
        index = self.index
        if index is None:
            index = np.arange(len(values))
        index = np.array(index)
        if len(index) != len(values):
            raise DomainError(
                f"index length {len(index)} != values length {len(values)}"
            )
        if np.any(np.diff(index) <= 0):
            raise DomainError("index must be strictly increasing")
        if self.timestamps is not None and len(self.timestamps) != len(values):
            raise DomainError("timestamps length mismatch")
        values.setflags(write=False)
        index.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "index", index)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def rescaled_times(self) -> np.ndarray:
        """Positions mapped to (0, 1]: observation t of T sits at t/T."""
        T = len(self.values)
        return np.arange(1, T + 1) / T


@dataclass(frozen=True)
class Panel:
    """Mapping from asset identifier to TimeSeries (lengths may differ)."""

    members: dict

    def __post_init__(self):
        if not self.members:
            raise DomainError("panel must contain at least one series")
        for name, ts in self.members.items():
            if not isinstance(ts, TimeSeries):
                raise DomainError(f"panel member {name!r} is not a TimeSeries")

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members.items())

    def __getitem__(self, key) -> TimeSeries:
        return self.members[key]


@dataclass(frozen=True)
class SampleSplit:
    """In-sample length m and out-of-sample length, with m + out = T."""

    in_sample_len: int
    out_sample_len: int

    def __post_init__(self):
        if self.in_sample_len < 1:
            raise DomainError(f"in_sample_len must be >= 1, got {self.in_sample_len}")
        if self.out_sample_len < 1:
            raise DomainError(
                f"out_sample_len must be >= 1, got {self.out_sample_len}"
            )

    @property
    def total_len(self) -> int:
        return self.in_sample_len + self.out_sample_len


def split(series: TimeSeries, m: int) -> tuple[TimeSeries, TimeSeries]:
    """Split into (observations 1..m, observations m+1..T).

    Concatenating the two outputs reproduces the input.
    """
    T = len(series)
    if not 1 <= m < T:
        raise DomainError(f"split point m={m} violates 1 <= m < T={T}")
    ts = series.timestamps

    def piece(sl):
        return TimeSeries(
            values=np.array(series.values[sl]),
            index=np.array(series.index[sl]),
            timestamps=None if ts is None else np.asarray(ts)[sl],
            frequency_label=series.frequency_label,
        )

    return piece(slice(0, m)), piece(slice(m, T))


def log_difference(series: TimeSeries) -> TimeSeries:
    """First difference of the log series; length T-1.

    Element t equals log(v_{t+1}) - log(v_t).  All values must be strictly
    positive.
    """
    v = series.values
    nonpos = np.flatnonzero(v <= 0)
    if nonpos.size:
        raise DomainError(
            f"log_difference requires strictly positive values; "
            f"offending position {int(nonpos[0])} has value {v[nonpos[0]]}"
        )
    out = np.diff(np.log(v))
    ts = series.timestamps
    return TimeSeries(
        values=out,
        index=np.array(series.index[1:]),
        timestamps=None if ts is None else np.asarray(ts)[1:],
        frequency_label=series.frequency_label,
    )


def _column_to_series(dates, values, name, frequency_label) -> TimeSeries:
    values = np.asarray(values, dtype=float)
    # trailing/leading gaps from ragged panels are tolerated, interior gaps are not
    finite = np.isfinite(values)
    if not finite.any():
        raise DomainError(f"column {name!r} holds no finite values")
    lo, hi = np.flatnonzero(finite)[[0, -1]]
    if not finite[lo : hi + 1].all():
        bad = lo + int(np.flatnonzero(~finite[lo : hi + 1])[0])
        raise DomainError(f"column {name!r} has a missing value at row {bad}")
    return TimeSeries(
        values=values[lo : hi + 1],
        timestamps=np.asarray(dates)[lo : hi + 1],
        frequency_label=frequency_label,
    )


def read_series_csv(path, frequency_label: str = "") -> TimeSeries:
    """Read a two-column ``date,value`` CSV (header required, ISO dates)."""
    frame = pd.read_csv(path)
    if frame.shape[1] != 2:
        raise DomainError(
            f"{path}: expected 2 columns (date,value), found {frame.shape[1]}"
        )
    dates = pd.to_datetime(frame.iloc[:, 0], format="ISO8601")
    return _column_to_series(
        dates.dt.strftime("%Y-%m-%d").to_numpy(),
        frame.iloc[:, 1].to_numpy(),
        frame.columns[1],
        frequency_label,
    )


def read_panel_csv(path, frequency_label: str = "") -> Panel:
    """Read a wide panel CSV ``date,asset1,...,assetK`` (header required)."""
    frame = pd.read_csv(path)
    if frame.shape[1] < 2:
        raise DomainError(f"{path}: expected at least 2 columns")
    dates = pd.to_datetime(frame.iloc[:, 0], format="ISO8601")
    stamps = dates.dt.strftime("%Y-%m-%d").to_numpy()
    members = {}
    for col in frame.columns[1:]:
        members[str(col)] = _column_to_series(
            stamps, frame[col].to_numpy(), col, frequency_label
        )
    return Panel(members)
