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


import os
import tempfile

import numpy as np
import pandas as pd
import pytest
import statsmodels.api as sm
from test_tools.asserts import assert_allclose

from momentnet.config import Regime
from momentnet.errors import DataError, RankError, SampleSizeError
from momentnet.localproj import (
    HEAT_EXPONENT,
    LpSpec,
    RegimeDummies,
    build_dummies,
    heat_indicator,
    heat_table,
    lp_regress,
    macro_controls,
    monthly,
    run_local_projections,
    write_dummies,
    write_heat,
    write_lp,
)
from momentnet.shocks import MacroPanel, ShockSeries
from momentnet.timeseries import EventCalendar

BARE = LpSpec(h_max=0, lagged_dependent=False, controls=False)


def mk_shocks(months, s_mp):
    s_mp = np.asarray(s_mp, dtype=np.float64)
    zeros = np.zeros_like(s_mp)
    return ShockSeries(
        pd.PeriodIndex(months), s_mp, s_mp, zeros, 100, zeros > 0.0
    )


def mk_sample(rng, T=120, beta=(1.0, 0.0, -0.5), regimes=3, scale=1.0):
    months = pd.period_range("2000-01", periods=T, freq="M")
    state = rng.integers(regimes, size=T)
    onehot = np.eye(3, dtype=int)[state]
    dummies = RegimeDummies(months, onehot[:, 0], onehot[:, 1], onehot[:, 2])
    s = rng.standard_normal(T)
    effect = (onehot * s[:, None]) @ np.asarray(beta)
    c = np.zeros(T)
    for t in range(T):
        c[t] = 0.5 * (c[t - 1] if t else 0.0) + effect[t]
        c[t] += scale * rng.standard_normal()
    controls = pd.DataFrame(
        rng.standard_normal((T, 2)), index=months, columns=["d_cpi", "d_ip"]
    )
    return pd.Series(c, index=months), mk_shocks(months, s), dummies, controls


def bare_design(index, shocks, dummies, h):
    s = shocks.s_mp
    X = np.column_stack(
        [np.ones(len(s)), s * dummies.hike, s * dummies.unch, s * dummies.cut]
    )
    y = index.to_numpy()
    return X[: len(s) - h], y[h:]


def test_dummies():
    months = pd.period_range("2021-01", "2021-07", freq="M")
    events = EventCalendar(
        pd.DatetimeIndex(
            [
                "2021-01-27",
                "2021-03-17",
                "2021-04-28",
                "2021-06-16",
                "2021-07-28",
            ]
        ),
        ("hike", "unchanged", "unchanged", "cut", "unchanged"),
    )
    s_mp = [0.1, 0.0, 0.2, -0.1, 0.0, -0.3, 0.05]
    dummies = build_dummies(events, mk_shocks(months, s_mp))
    assert dummies.hike.tolist() == [1, 0, 1, 0, 0, 0, 0]
    assert dummies.unch.tolist() == [0, 0, 1, 1, 0, 0, 1]
    assert dummies.cut.tolist() == [0, 0, 0, 1, 0, 1, 0]
    assert dummies.column(Regime.UNCHANGED) is dummies.unch
    clash = EventCalendar(
        pd.DatetimeIndex(["2021-03-03", "2021-03-17"]), ("hike", "cut")
    )
    with pytest.raises(DataError):
        build_dummies(clash, mk_shocks(months, s_mp))
    with tempfile.TemporaryDirectory() as root:
        path = write_dummies(dummies, os.path.join(root, "dummies.csv"))
        frame = pd.read_csv(path)
    assert list(frame.columns) == ["month", "hike", "unch", "cut"]
    assert frame["month"].iloc[0] == "2021-01"


def test_normal_equations():
    rng = np.random.default_rng(0)
    index, shocks, dummies, _ = mk_sample(rng)
    res = lp_regress(index, shocks, dummies, None, 0, BARE)
    X, y = bare_design(index, shocks, dummies, 0)
    beta = np.linalg.solve(X.T @ X, X.T @ y)
    assert res.names == ("const", "mp_hike", "mp_unch", "mp_cut")
    assert_allclose(res.coef, beta, rtol=1e-10, atol=1e-12)
    assert res.covariance == "hac"
    assert res.nobs == 120
    fit = sm.OLS(y, X).fit(cov_type="HC0")
    assert_allclose(res.se, fit.bse, rtol=1e-10)


def test_newey_west():
    rng = np.random.default_rng(1)
    index, shocks, dummies, _ = mk_sample(rng)
    h = 3
    res = lp_regress(index, shocks, dummies, None, h, BARE)
    X, y = bare_design(index, shocks, dummies, h)
    fit = sm.OLS(y, X).fit(
        cov_type="HAC", cov_kwds={"maxlags": h, "use_correction": False}
    )
    assert res.nobs == 120 - h
    assert_allclose(res.coef, fit.params, rtol=1e-10, atol=1e-12)
    assert_allclose(res.se, fit.bse, rtol=1e-8)


def test_scaling():
    rng = np.random.default_rng(2)
    index, shocks, dummies, controls = mk_sample(rng)
    spec = LpSpec(h_max=2)
    base = lp_regress(index, shocks, dummies, controls, 2, spec)
    scaled = lp_regress(3.0 * index, shocks, dummies, controls, 2, spec)
    for name in ("mp_hike", "mp_unch", "mp_cut"):
        coef, se, p = base.get(name)
        coef3, se3, p3 = scaled.get(name)
        assert_allclose(coef3, 3.0 * coef, rtol=1e-9)
        assert_allclose(se3, 3.0 * se, rtol=1e-9)
        assert_allclose(p3, p, rtol=1e-8)
    assert_allclose(scaled.get("lag")[0], base.get("lag")[0], rtol=1e-9)
    halved = mk_shocks(shocks.months, 2.0 * shocks.s_mp)
    other = lp_regress(index, halved, dummies, controls, 2, spec)
    assert_allclose(
        other.get("mp_hike")[0], 0.5 * base.get("mp_hike")[0], rtol=1e-9
    )


def test_heat_indicator():
    assert heat_indicator(1.0, 0.1) < 0.48
    assert abs(heat_indicator(1.0, 0.1) - 0.9**HEAT_EXPONENT) < 1e-15
    threshold = 1.0 - 0.48 ** (1.0 / HEAT_EXPONENT)
    assert heat_indicator(2.0, 0.99 * threshold) > 0.48
    assert heat_indicator(-2.0, 0.99 * threshold) < -0.48
    assert heat_indicator(1.5, 0.0) == 1.0
    assert heat_indicator(-1.5, 0.0) == -1.0
    assert heat_indicator(0.3, 1.0) == 0.0
    with pytest.raises(ValueError):
        heat_indicator(1.0, 1.1)


def test_bands_and_regimes():
    rng = np.random.default_rng(3)
    index, shocks, dummies, controls = mk_sample(rng, regimes=2)
    spec = LpSpec(h_max=4)
    result = run_local_projections(
        index, shocks, dummies, controls, spec, "projection"
    )
    assert [res.h for res in result.horizons] == list(range(5))
    assert [res.nobs for res in result.horizons] == [119 - h for h in range(5)]
    for res in result.horizons:
        i = res.names.index("mp_cut")
        assert not res.identified[i]
        assert np.isnan(res.coef[i]) and np.isnan(res.se[i])
        lo68, hi68 = res.bands[0.68]
        lo90, hi90 = res.bands[0.90]
        ok = res.identified
        assert np.all(lo90[ok] < lo68[ok]) and np.all(hi68[ok] < hi90[ok])
        assert_allclose(0.5 * (lo68 + hi68)[ok], res.coef[ok], rtol=1e-12)
    frame = result.to_frame()
    assert list(frame.columns[:4]) == ["h", "coef_hike", "se_hike", "p_hike"]
    assert frame["coef_cut"].isna().all()
    assert frame["band90_lo_cut"].isna().all()
    assert frame["coef_hike"].notna().all()
    assert frame.columns[10] == "band68_lo_hike"
    assert frame.columns[-1] == "nobs"
    heat = heat_table({"projection": result})
    assert len(heat) == 15
    cut = heat[heat["regime"] == "cut"]
    assert cut["s"].isna().all()
    assert heat[heat["regime"] == "hike"]["s"].abs().max() <= 1.0
    with tempfile.TemporaryDirectory() as root:
        written = pd.read_csv(write_lp(result, os.path.join(root, "lp.csv")))
        back = pd.read_csv(write_heat({"x": result}, os.path.join(root, "h")))
    assert list(back.columns) == ["node", "h", "regime", "s"]
    assert written["coef_cut"].isna().all()
    assert written["se_cut"].isna().all()


def test_regression_errors():
    rng = np.random.default_rng(4)
    index, shocks, dummies, _ = mk_sample(rng, regimes=1)
    constant = mk_shocks(shocks.months, np.ones(len(shocks.months)))
    with pytest.raises(RankError) as info:
        lp_regress(index, constant, dummies, None, 0, BARE)
    assert info.value.columns == ("mp_hike",)
    short = index.iloc[:8]
    with pytest.raises(SampleSizeError):
        lp_regress(short, shocks, dummies, None, 0, BARE)


def test_band_coverage():
    rng = np.random.default_rng(5)
    hits = 0
    reps = 200
    for _ in range(reps):
        months = pd.period_range("2000-01", periods=150, freq="M")
        state = rng.integers(3, size=150)
        onehot = np.eye(3, dtype=int)[state]
        dummies = RegimeDummies(
            months, onehot[:, 0], onehot[:, 1], onehot[:, 2]
        )
        s = rng.standard_normal(150)
        c = 1.0 * s * onehot[:, 0] + rng.standard_normal(150)
        res = lp_regress(
            pd.Series(c, index=months),
            mk_shocks(months, s),
            dummies,
            None,
            0,
            BARE,
        )
        lo, hi = res.bands[0.90]
        i = res.names.index("mp_hike")
        hits += lo[i] <= 1.0 <= hi[i]
    assert 0.82 <= hits / reps <= 0.97


def test_monthly_and_controls():
    dates = pd.bdate_range("2020-01-01", "2020-03-31")
    daily = pd.Series(np.arange(len(dates), dtype=np.float64), index=dates)
    last = monthly(daily, "last")
    mean = monthly(daily, "mean")
    assert [str(m) for m in last.index] == ["2020-01", "2020-02", "2020-03"]
    assert last.iloc[0] == daily.loc[:"2020-01-31"].iloc[-1]
    assert_allclose(mean.iloc[1], daily.loc["2020-02"].mean())
    with pytest.raises(ValueError):
        monthly(daily, "median")
    months = pd.period_range("2020-01", periods=3, freq="M")
    values = np.array(
        [
            [1.0, 3000.0, 100.0, 0.1, 100.0],
            [1.1, 3100.0, 101.0, 0.2, 99.0],
            [1.2, 3200.0, 102.0, 0.3, 101.0],
        ]
    )
    controls = macro_controls(MacroPanel(months, values))
    assert np.isnan(controls["d_cpi"].iloc[0])
    assert_allclose(controls["d_cpi"].iloc[1], 100.0 * np.log(1.01))
    assert_allclose(controls["d_ip"].iloc[1], 100.0 * np.log(0.99))
    values[1, 2] = 0.0
    with pytest.raises(DataError):
        macro_controls(MacroPanel(months, values))


if __name__ == "__main__":
    test_dummies()
    test_normal_equations()
    test_newey_west()
    test_scaling()
    test_heat_indicator()
    test_bands_and_regimes()
    test_regression_errors()
    test_band_coverage()
    test_monthly_and_controls()
