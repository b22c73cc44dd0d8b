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


import math
import os
import tempfile

import numpy as np
import pandas as pd
import pytest
from test_tools.asserts import assert_allclose
from test_tools.generators import mk_dates

from momentnet.errors import (
    AlignmentError,
    DataError,
    DomainError,
    SampleSizeError,
)
from momentnet.timeseries import (
    PricePanel,
    adf_test,
    align_calendars,
    default_adf_lag,
    jarque_bera_statistic,
    log_returns,
    read_events,
    read_prices,
    summary_stats,
)


def test_align_identity():
    dates = mk_dates(5)
    a = pd.Series(np.arange(1.0, 6.0), index=dates)
    b = pd.Series(np.arange(2.0, 7.0), index=dates)
    panel = align_calendars({"a": a, "b": b})
    assert len(panel.dates) == 5
    assert panel.names == ("a", "b")
    assert np.array_equal(panel.values[:, 1], b.to_numpy())


def test_align_intersection():
    d = mk_dates(4)
    a = pd.Series([1.0, 2.0, 3.0], index=d[:3])
    b = pd.Series([4.0, 5.0, 6.0], index=d[1:])
    panel = align_calendars({"a": a, "b": b})
    assert list(panel.dates) == list(d[1:3])
    assert np.array_equal(panel.values, [[2.0, 4.0], [3.0, 5.0]])


def test_align_frame():
    d = mk_dates(4)
    frame = pd.DataFrame(
        {"a": [1.0, 2.0, 3.0, 4.0], "b": [5.0, np.nan, 7.0, 8.0]}, index=d
    )
    panel = align_calendars(frame)
    assert panel.names == ("a", "b")
    assert list(panel.dates) == [d[0], d[2], d[3]]
    assert np.array_equal(panel.values[:, 1], [5.0, 7.0, 8.0])
    extra = pd.Series([9.0, 9.0], index=d[2:], name="c")
    mixed = align_calendars([frame, extra])
    assert mixed.names == ("a", "b", "c")
    assert list(mixed.dates) == list(d[2:])


def test_align_random_holidays():
    rng = np.random.default_rng(3)
    dates = mk_dates(1000)
    series, kept = {}, []
    for i in range(9):
        mask = rng.uniform(size=len(dates)) >= 0.01
        kept.append(set(dates[mask]))
        series[f"s{i}"] = pd.Series(
            rng.uniform(1.0, 2.0, mask.sum()), index=dates[mask]
        )
    panel = align_calendars(series)
    expected = set.intersection(*kept)
    assert len(panel.dates) == len(expected)
    assert set(panel.dates) == expected
    assert panel.dates.is_monotonic_increasing


def test_align_errors():
    d = mk_dates(4)
    with pytest.raises(AlignmentError):
        align_calendars(
            {
                "a": pd.Series([1.0, 2.0], index=d[:2]),
                "b": pd.Series([1.0, 2.0], index=d[2:]),
            }
        )
    with pytest.raises(DataError):
        align_calendars({"a": pd.Series([1.0], index=d[:1])})


def test_log_returns():
    dates = mk_dates(2)
    flat = PricePanel(dates, [[100.0], [100.0]], ("x",))
    assert log_returns(flat).values[0, 0] == 0.0
    up = PricePanel(dates, [[100.0], [100.0 * math.exp(0.01)]], ("x",))
    assert_allclose(log_returns(up).values[0, 0], 1.0, rtol=0, atol=1e-12)


def test_log_returns_round_trip():
    rng = np.random.default_rng(0)
    prices = 50.0 * np.exp(np.cumsum(rng.normal(0, 0.01, (500, 3)), axis=0))
    panel = PricePanel(mk_dates(500), prices, ("a", "b", "c"))
    r = log_returns(panel)
    assert r.values.shape == (499, 3)
    rebuilt = prices[0] * np.exp(np.cumsum(r.values / 100.0, axis=0))
    assert_allclose(rebuilt, prices[1:], rtol=1e-10, atol=0)


def test_log_returns_nonpositive():
    panel = PricePanel(mk_dates(3), [[1.0], [0.0], [2.0]], ("x",))
    with pytest.raises(DomainError):
        log_returns(panel)


def test_jarque_bera():
    assert jarque_bera_statistic(500, 0.0, 0.0) == 0.0
    assert_allclose(jarque_bera_statistic(100, 0.6, 1.2), 12.0, atol=1e-12)


def test_summary_stats():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((400, 2))
    from momentnet.timeseries import ReturnPanel

    stats = summary_stats(ReturnPanel(mk_dates(400), x, ("a", "b")))
    frame = stats.to_frame()
    assert list(frame["series"]) == ["a", "b"]
    assert np.all(frame["std"] >= 0) and np.all(frame["jb"] >= 0)
    assert np.all((frame["jb_pvalue"] >= 0) & (frame["jb_pvalue"] <= 1))
    assert_allclose(stats.mean, x.mean(axis=0), atol=1e-12)
    assert_allclose(stats.std, x.std(axis=0, ddof=1), atol=1e-12)
    # stationary noise rejects a unit root
    assert np.all(stats.adf_pvalue < 0.01)


def test_summary_errors():
    from momentnet.timeseries import ReturnPanel

    with pytest.raises(SampleSizeError):
        summary_stats(ReturnPanel(mk_dates(20), np.ones(20) * 0.1, ("a",)))
    with pytest.raises(DomainError):
        summary_stats(ReturnPanel(mk_dates(50), np.ones(50), ("a",)))


def _adf_ols(x, lag):
    dx = np.diff(x)
    rows = np.arange(lag, len(dx))
    X = [np.ones(len(rows)), x[rows]]
    X += [dx[rows - i] for i in range(1, lag + 1)]
    X = np.column_stack(X)
    y = dx[rows]
    beta = np.linalg.solve(X.T @ X, X.T @ y)
    resid = y - X @ beta
    s2 = resid @ resid / (len(y) - X.shape[1])
    cov = s2 * np.linalg.inv(X.T @ X)
    return beta[1] / math.sqrt(cov[1, 1])


def test_adf_matches_ols():
    rng = np.random.default_rng(4)
    e = rng.standard_normal(2000)
    x = np.empty(2000)
    x[0] = e[0]
    for t in range(1, 2000):
        x[t] = 0.5 * x[t - 1] + e[t]
    stat, pvalue, lag = adf_test(x)
    assert 0 <= lag <= default_adf_lag(2000)
    assert_allclose(stat, _adf_ols(x, lag), rtol=0, atol=1e-8)
    assert pvalue < 0.01


def test_default_adf_lag():
    assert default_adf_lag(100) == 12
    assert default_adf_lag(2000) == math.floor(12 * 20**0.25)


def test_read_inputs():
    with tempfile.TemporaryDirectory() as root:
        prices = os.path.join(root, "prices.csv")
        with open(prices, "w") as f:
            f.write("date,a,b\n")
            f.write("2020-01-02,1.0,2.0\n2020-01-03,1.1,2.1\n")
            f.write("2020-01-06,1.2,\n2020-01-07,1.3,2.3\n")
        panel = read_prices(prices)
        assert panel.values.shape == (3, 2)
        assert panel.names == ("a", "b")
        assert_allclose(panel.values[:, 1], [2.0, 2.1, 2.3])
        events = os.path.join(root, "events.csv")
        with open(events, "w") as f:
            f.write("date,decision\n2020-01-29,unchanged\n2020-03-03,cut\n")
        calendar = read_events(events)
        assert calendar.decisions == ("unchanged", "cut")
        with open(events, "a") as f:
            f.write("2020-03-15,pause\n")
        with pytest.raises(DataError):
            read_events(events)


if __name__ == "__main__":
    test_align_identity()
    test_align_intersection()
    test_align_frame()
    test_align_random_holidays()
    test_align_errors()
    test_log_returns()
    test_log_returns_round_trip()
    test_log_returns_nonpositive()
    test_jarque_bera()
    test_summary_stats()
    test_summary_errors()
    test_adf_matches_ols()
    test_default_adf_lag()
    test_read_inputs()
