# Copyright 2024 The momentnet Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
#

"""Price panels, returns, summary statistics and event calendars."""

import logging
import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
import pandas as pd
from scipy import stats
from statsmodels.tsa.stattools import adfuller

from momentnet.config import DECISIONS
from momentnet.errors import (
    AlignmentError,
    DataError,
    DomainError,
    SampleSizeError,
)
from momentnet.io import read_csv, write_csv

logger = logging.getLogger(__name__)

MIN_SUMMARY_OBS = 30

SUMMARY_COLUMNS = [
    "series",
    "mean",
    "std",
    "max",
    "min",
    "skewness",
    "kurtosis",
    "adf",
    "adf_pvalue",
    "adf_lag",
    "jb",
    "jb_pvalue",
    "nobs",
]


def _check_dates(dates, what):
    dates = pd.DatetimeIndex(dates)
    if dates.has_duplicates:
        raise DataError(f"{what}: duplicate dates")
    if not dates.is_monotonic_increasing:
        raise DataError(f"{what}: dates must be strictly increasing")
    return dates


@dataclass(frozen=True)
class PricePanel:
    dates: pd.DatetimeIndex
    values: np.ndarray
    names: tuple

    def __post_init__(self):
        object.__setattr__(self, "dates", _check_dates(self.dates, "prices"))
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "names", tuple(self.names))
        if values.shape != (len(self.dates), len(self.names)):
            raise DataError(
                f"price matrix has shape {values.shape}, expected "
                f"({len(self.dates)}, {len(self.names)})"
            )
        if not np.all(np.isfinite(values)):
            raise DataError("price panel has missing or non-finite cells")

    def to_frame(self):
        return pd.DataFrame(self.values, index=self.dates, columns=self.names)


@dataclass(frozen=True)
class ReturnPanel:
    dates: pd.DatetimeIndex
    values: np.ndarray
    names: tuple

    def __post_init__(self):
        object.__setattr__(self, "dates", _check_dates(self.dates, "returns"))
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "names", tuple(self.names))
        if values.shape != (len(self.dates), len(self.names)):
            raise DataError(
                f"return matrix has shape {values.shape}, expected "
                f"({len(self.dates)}, {len(self.names)})"
            )
        if not np.all(np.isfinite(values)):
            raise DataError("return panel has non-finite values")

    def column(self, name):
        return self.values[:, self.names.index(name)]

    def to_frame(self):
        return pd.DataFrame(self.values, index=self.dates, columns=self.names)


@dataclass(frozen=True)
class SummaryStats:
    """Per-series descriptive statistics; arrays are aligned with
    ``names``."""

    names: tuple
    mean: np.ndarray
    std: np.ndarray
    max: np.ndarray
    min: np.ndarray
    skewness: np.ndarray
    kurtosis: np.ndarray
    adf: np.ndarray
    adf_pvalue: np.ndarray
    adf_lag: np.ndarray
    jb: np.ndarray
    jb_pvalue: np.ndarray
    nobs: np.ndarray

    def to_frame(self):
        data = {"series": list(self.names)}
        for column in SUMMARY_COLUMNS[1:]:
            data[column] = getattr(self, column)
        return pd.DataFrame(data, columns=SUMMARY_COLUMNS)


@dataclass(frozen=True)
class EventCalendar:
    dates: pd.DatetimeIndex
    decisions: tuple = field(default=())

    def __post_init__(self):
        dates = _check_dates(self.dates, "events")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "decisions", tuple(self.decisions))
        if len(self.decisions) != len(dates):
            raise DataError("events: one decision per date is required")
        for date, decision in zip(dates, self.decisions):
            if decision not in DECISIONS:
                raise DataError(
                    f"events: decision '{decision}' on {date.date()} must "
                    f"be one of {', '.join(DECISIONS)}"
                )

    def __len__(self):
        return len(self.dates)

    def to_frame(self):
        return pd.DataFrame(
            {"date": self.dates, "decision": list(self.decisions)}
        )


def align_calendars(raw):
    """Restrict every series to the dates all of them share.

    ``raw`` is a date-indexed ``pd.DataFrame``, a mapping of name to
    ``pd.Series`` or a sequence of ``pd.Series``/``pd.DataFrame`` objects
    indexed by date.
    """
    if isinstance(raw, pd.DataFrame):
        raw = [raw]
    if isinstance(raw, dict):
        columns = [s.rename(name) for name, s in raw.items()]
    else:
        columns = []
        for item in raw:
            if isinstance(item, pd.DataFrame):
                columns.extend(item[c] for c in item.columns)
            else:
                columns.append(item)
    if not columns:
        raise AlignmentError("no series to align")
    for series in columns:
        series = series.dropna()
        if len(series) < 2:
            raise DataError(
                f"series '{series.name}' has fewer than 2 observations"
            )
        if series.index.has_duplicates:
            raise DataError(f"series '{series.name}' has duplicate dates")
    indices = [pd.DatetimeIndex(s.dropna().index) for s in columns]
    common = reduce(lambda a, b: a.intersection(b), indices).sort_values()
    if len(common) == 0:
        raise AlignmentError("series share no common dates")
    dropped = max(len(ix) for ix in indices) - len(common)
    logger.debug(
        "align series=%d dates=%d dropped=%d",
        len(columns),
        len(common),
        dropped,
    )
    values = np.column_stack(
        [s.dropna().reindex(common).to_numpy(np.float64) for s in columns]
    )
    return PricePanel(common, values, tuple(str(s.name) for s in columns))


def log_returns(panel):
    prices = panel.values
    if np.any(prices <= 0.0):
        row, col = np.argwhere(prices <= 0.0)[0]
        raise DomainError(
            f"nonpositive price {prices[row, col]} for "
            f"'{panel.names[col]}' on {panel.dates[row].date()}"
        )
    values = 100.0 * np.diff(np.log(prices), axis=0)
    return ReturnPanel(panel.dates[1:], values, panel.names)


def default_adf_lag(nobs):
    return int(math.floor(12.0 * (nobs / 100.0) ** 0.25))


def jarque_bera_statistic(n, skewness, kurtosis):
    """Jarque-Bera statistic from sample skewness and excess kurtosis."""
    return n / 6.0 * (skewness**2 + kurtosis**2 / 4.0)


def sample_moments(x):
    """Mean, std (ddof=1), skewness and excess kurtosis of ``x``."""
    x = np.asarray(x, dtype=np.float64)
    mean = x.mean()
    dev = x - mean
    m2 = np.mean(dev**2)
    if not m2 > 0.0:
        raise DomainError("degenerate variance: series is constant")
    m3 = np.mean(dev**3)
    m4 = np.mean(dev**4)
    return mean, x.std(ddof=1), m3 / m2**1.5, m4 / m2**2 - 3.0


def adf_test(x, max_lag=None):
    """Dickey-Fuller regression with intercept and AIC lag choice.

    Returns ``(statistic, pvalue, used_lag)``.
    """
    x = np.asarray(x, dtype=np.float64)
    if max_lag is None:
        max_lag = default_adf_lag(len(x))
    # statsmodels bound on the largest admissible lag
    max_lag = max(0, min(max_lag, len(x) // 2 - 2))
    stat, pvalue, used, *_ = adfuller(
        x, maxlag=max_lag, regression="c", autolag="AIC"
    )
    return float(stat), float(pvalue), int(used)


def summary_stats(returns, adf_max_lag=None):
    rows = {c: [] for c in SUMMARY_COLUMNS[1:]}
    for i, name in enumerate(returns.names):
        x = returns.values[:, i]
        n = len(x)
        if n < MIN_SUMMARY_OBS:
            raise SampleSizeError(
                f"series '{name}' has {n} observations, "
                f"at least {MIN_SUMMARY_OBS} are required"
            )
        try:
            mean, std, skew, kurt = sample_moments(x)
        except DomainError as e:
            raise DomainError(f"series '{name}': {e}") from e
        adf, adf_p, adf_lag = adf_test(x, adf_max_lag)
        jb = jarque_bera_statistic(n, skew, kurt)
        for key, value in (
            ("mean", mean),
            ("std", std),
            ("max", x.max()),
            ("min", x.min()),
            ("skewness", skew),
            ("kurtosis", kurt),
            ("adf", adf),
            ("adf_pvalue", adf_p),
            ("adf_lag", adf_lag),
            ("jb", jb),
            ("jb_pvalue", stats.chi2.sf(jb, 2)),
            ("nobs", n),
        ):
            rows[key].append(value)
        logger.debug("summary series=%s adf=%.4f jb=%.4f", name, adf, jb)
    return SummaryStats(
        names=tuple(returns.names),
        **{k: np.asarray(v) for k, v in rows.items()},
    )


def read_prices(path):
    frame = read_csv(path)
    if "date" not in frame.columns or len(frame.columns) < 2:
        raise DataError(f"{path}: header must be date,<name1>,...")
    try:
        dates = pd.to_datetime(frame.pop("date"), format="%Y-%m-%d")
    except (ValueError, TypeError) as e:
        raise DataError(f"{path}: dates must be YYYY-MM-DD: {e}")
    frame.index = pd.DatetimeIndex(dates)
    try:
        frame = frame.astype(np.float64)
    except ValueError as e:
        raise DataError(f"{path}: non-numeric price: {e}")
    if (frame <= 0.0).any().any():
        raise DataError(f"{path}: prices must be positive")
    panel = align_calendars(frame.sort_index())
    logger.info(
        "read prices path=%s series=%d dates=%d",
        path,
        len(panel.names),
        len(panel.dates),
    )
    return panel


def read_events(path):
    frame = read_csv(path)
    if list(frame.columns) != ["date", "decision"]:
        raise DataError(f"{path}: header must be date,decision")
    try:
        dates = pd.to_datetime(frame["date"], format="%Y-%m-%d")
    except (ValueError, TypeError) as e:
        raise DataError(f"{path}: dates must be YYYY-MM-DD: {e}")
    decisions = [str(d).strip().lower() for d in frame["decision"]]
    return EventCalendar(pd.DatetimeIndex(dates), tuple(decisions))


def write_summary(summary, path):
    return write_csv(summary.to_frame(), path)
