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
import warnings

import numpy as np
import pandas as pd
import pytest
from test_tools.asserts import assert_allclose

from momentnet.errors import (
    DataError,
    IdentificationError,
    SampleSizeError,
)
from momentnet.shocks import (
    PosteriorDraws,
    aggregate_surprises,
    contributions,
    decompose_shocks,
    fit_restricted_bvar,
    identify_signs,
    read_macro,
    read_shocks,
    rotation,
    satisfies_signs,
    write_shocks,
)
from momentnet.synth import SynthConfig, gen_shock_dataset


def synthetic(seed=11):
    config = SynthConfig(seed=seed, n_days=300, n_months=400)
    return gen_shock_dataset(config)


def test_aggregate_surprises():
    events = pd.DataFrame(
        {
            "date": ["2020-01-15", "2020-01-29", "2020-03-18"],
            "fff_surprise": [0.1, -0.05, 0.2],
            "spx_surprise": [-1.0, 0.5, 2.0],
        }
    )
    panel = aggregate_surprises(events)
    assert [str(m) for m in panel.months] == ["2020-01", "2020-02", "2020-03"]
    assert_allclose(panel.values[0], [0.05, -0.5], rtol=1e-14)
    assert np.array_equal(panel.values[1], [0.0, 0.0])
    twice = pd.concat([events, events.iloc[:1]])
    with pytest.raises(DataError):
        aggregate_surprises(twice)
    with pytest.raises(DataError):
        aggregate_surprises(events.drop(columns="spx_surprise"))


def test_rotation_contributions():
    theta = 0.3
    R = rotation(theta)
    assert_allclose(R @ R.T, np.eye(2), atol=1e-15)
    impact = np.array([[0.04, 0.03], [-0.5, 0.6]])
    assert satisfies_signs(impact)
    assert not satisfies_signs(impact[:, ::-1])
    rng = np.random.default_rng(0)
    m = rng.standard_normal((20, 2)) * [0.05, 0.5]
    mp, info = contributions(impact, m)
    assert_allclose(mp + info, m[:, 0], rtol=1e-12, atol=1e-15)


def test_identified_draws_satisfy_signs():
    data = synthetic()
    surprises, macro = data.macro.aligned(data.surprises)
    draws = fit_restricted_bvar(
        surprises.values, macro.values, p=2, draws=150, seed=1
    )
    assert len(draws) == 150
    assert np.all(draws.coef[:, :, :2] == 0.0)
    for k in range(len(draws)):
        assert np.all(np.linalg.eigvalsh(draws.sigma[k]) > 0.0)
    identified = identify_signs(draws, angles=100, seed=1)
    assert len(identified) > 100
    for impact in identified.impact:
        assert satisfies_signs(impact)
    # the surprise covariance is reproduced by every accepted impact
    for impact, k in zip(identified.impact, identified.draw_index):
        assert_allclose(
            impact @ impact.T, draws.sigma[k][:2, :2], rtol=1e-10
        )


def test_decomposition_recovers_truth():
    data = synthetic()
    surprises, macro = data.macro.aligned(data.surprises)
    draws = fit_restricted_bvar(
        surprises.values, macro.values, p=2, draws=300, seed=2
    )
    identified = identify_signs(draws, angles=100, seed=2)
    series = decompose_shocks(
        identified, surprises.values, surprises.months, min_accepted=50
    )
    total = surprises.values[:, 0]
    assert np.array_equal(series.s_total, total)
    assert_allclose(series.s_mp + series.s_if, total, rtol=0, atol=1e-12)
    quiet = total == 0.0
    assert np.all(series.s_mp[quiet] == 0.0)
    assert np.corrcoef(series.s_mp, data.s_mp)[0, 1] > 0.9
    assert np.corrcoef(series.s_if, data.s_if)[0, 1] > 0.9
    assert series.n_accepted == len(identified)


def mk_restricted_var(rng, T=400, q=2, n=5):
    """Block-restricted VAR(1): surprises are white noise, the macro block
    loads on lagged surprises and macro. Innovations are whitened so that
    their sample covariance is exactly ``sigma``."""
    K = q + n
    scales = np.array([0.05, 0.5, 1.0, 2.0, 0.5, 1.0, 0.3])[:K]
    corr = 0.3 * np.ones((K, K)) + 0.7 * np.eye(K)
    sigma = corr * np.outer(scales, scales)
    u = rng.standard_normal((T, K))
    u -= u.mean(axis=0)
    white = np.linalg.cholesky(u.T @ u / T)
    u = np.linalg.solve(white, u.T).T @ np.linalg.cholesky(sigma).T
    B = np.zeros((K, K))
    B[q:, q:] = 0.5 * np.eye(n)
    B[q:, :q] = 0.2
    c = np.r_[np.zeros(q), np.full(n, 0.1)]
    z = np.empty((T, K))
    z[0] = u[0]
    for t in range(1, T):
        z[t] = c + B @ z[t - 1] + u[t]
    return z[:, :q], z[:, q:], sigma


def test_posterior_covariance():
    m, y, sigma = mk_restricted_var(np.random.default_rng(21))
    draws = fit_restricted_bvar(m, y, p=1, draws=200, seed=7)
    mean = draws.sigma.mean(axis=0)
    error = np.linalg.norm(mean - sigma) / np.linalg.norm(sigma)
    assert error < 0.1
    assert np.all(draws.coef[:, :, :2] == 0.0)


def test_draws_are_deterministic():
    m, y, _ = mk_restricted_var(np.random.default_rng(22))
    first = fit_restricted_bvar(m, y, p=1, draws=20, seed=3)
    again = fit_restricted_bvar(m, y, p=1, draws=20, seed=3)
    other = fit_restricted_bvar(m, y, p=1, draws=20, seed=4)
    assert np.array_equal(first.sigma, again.sigma)
    assert np.array_equal(first.coef, again.coef)
    assert not np.array_equal(first.sigma, other.sigma)


def test_single_draw_is_exact():
    draws = PosteriorDraws(np.eye(2)[None], np.zeros((1, 1, 2)), p=0)
    identified = identify_signs(draws, angles=100, seed=0)
    assert len(identified) == 1
    rng = np.random.default_rng(23)
    m = rng.standard_normal((30, 2))
    m[5] = 0.0
    months = pd.period_range("2010-01", periods=30, freq="M")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        series = decompose_shocks(identified, m, months, min_accepted=1)
    mp, info = contributions(identified.impact[0], m)
    assert_allclose(series.s_mp, mp, rtol=1e-12, atol=1e-15)
    assert_allclose(series.s_if, info, rtol=1e-12, atol=1e-15)
    assert series.s_mp[5] == 0.0 and series.s_if[5] == 0.0


def test_equity_rescaling_invariance():
    data = synthetic()
    surprises, macro = data.macro.aligned(data.surprises)
    results = []
    for factor in (1.0, 10.0):
        m = surprises.values * [1.0, factor]
        draws = fit_restricted_bvar(m, macro.values, p=1, draws=80, seed=9)
        identified = identify_signs(draws, angles=100, seed=9)
        series = decompose_shocks(
            identified, m, surprises.months, min_accepted=10
        )
        results.append((identified, series))
    (base, base_series), (scaled, scaled_series) = results
    assert np.array_equal(base.draw_index, scaled.draw_index)
    assert np.array_equal(np.sign(base.impact), np.sign(scaled.impact))
    assert_allclose(scaled.impact[:, 1], 10.0 * base.impact[:, 1], rtol=1e-4)
    large = np.abs(base_series.s_mp) > 1e-3 * np.abs(base_series.s_mp).max()
    assert np.array_equal(
        np.sign(base_series.s_mp[large]), np.sign(scaled_series.s_mp[large])
    )


def test_few_accepted_draws_warn():
    data = synthetic()
    surprises, macro = data.macro.aligned(data.surprises)
    draws = fit_restricted_bvar(
        surprises.values, macro.values, p=1, draws=20, seed=3
    )
    identified = identify_signs(draws, angles=50, seed=3)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        decompose_shocks(
            identified, surprises.values, surprises.months, min_accepted=100
        )
    assert any("accepted draws" in str(w.message) for w in caught)


def test_identification_failure():
    # surprises moving one-for-one leave no room for a policy shock
    sigma = np.array([[[1.0, 1.0], [1.0, 1.0 + 1e-12]]])
    draws = PosteriorDraws(sigma, np.zeros((1, 1, 2)), p=0)
    with pytest.raises(IdentificationError):
        identify_signs(draws, angles=20, seed=0)


def test_short_sample():
    rng = np.random.default_rng(4)
    with pytest.raises(SampleSizeError):
        fit_restricted_bvar(
            rng.standard_normal((60, 2)), rng.standard_normal((60, 5)), p=12
        )


def test_shock_files():
    data = synthetic()
    surprises, macro = data.macro.aligned(data.surprises)
    draws = fit_restricted_bvar(
        surprises.values, macro.values, p=1, draws=60, seed=5
    )
    identified = identify_signs(draws, angles=100, seed=5)
    series = decompose_shocks(
        identified, surprises.values, surprises.months, min_accepted=10
    )
    with tempfile.TemporaryDirectory() as root:
        path = write_shocks(series, os.path.join(root, "shocks.csv"))
        back = read_shocks(path)
        bad = os.path.join(root, "macro.csv")
        pd.DataFrame({"month": ["2020-01"], "gs1": [1.0]}).to_csv(
            bad, index=False
        )
        with pytest.raises(DataError):
            read_macro(bad)
    assert list(back.months) == list(series.months)
    assert_allclose(back.s_mp, series.s_mp, rtol=1e-9, atol=1e-15)
    assert back.n_accepted == series.n_accepted


if __name__ == "__main__":
    test_aggregate_surprises()
    test_rotation_contributions()
    test_identified_draws_satisfy_signs()
    test_decomposition_recovers_truth()
    test_posterior_covariance()
    test_draws_are_deterministic()
    test_single_draw_is_exact()
    test_equity_rescaling_invariance()
    test_few_accepted_draws_warn()
    test_identification_failure()
    test_short_sample()
    test_shock_files()
