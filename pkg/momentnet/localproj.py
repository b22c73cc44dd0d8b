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

"""Local projections of connectedness indices on regime-interacted
monetary policy shocks."""

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.stats import norm

from momentnet.config import Regime
from momentnet.errors import DataError, RankError, SampleSizeError
from momentnet.io import write_csv
from momentnet.utils import fallback, format_months, to_month

logger = logging.getLogger(__name__)

HEAT_EXPONENT = 7
MIN_EXTRA_OBS = 10
REGRESSORS = (
    "const",
    "lag",
    "mp_hike",
    "mp_unch",
    "mp_cut",
    "d_cpi",
    "d_ip",
)
INTERACTIONS = {
    Regime.HIKE: "mp_hike",
    Regime.UNCHANGED: "mp_unch",
    Regime.CUT: "mp_cut",
}


@dataclass(frozen=True)
class LpSpec:
    h_max: int = 18
    bands: tuple = (0.68, 0.90)
    aggregation: str = "last"
    lagged_dependent: bool = True
    controls: bool = True

    def __post_init__(self):
        if self.h_max < 0:
            raise ValueError("h_max must be nonnegative")
        bands = tuple(sorted(float(b) for b in self.bands))
        if not bands or any(not 0.0 < b < 1.0 for b in bands):
            raise ValueError("band levels must lie in (0, 1)")
        object.__setattr__(self, "bands", bands)
        if self.aggregation not in ("last", "mean"):
            raise ValueError("aggregation must be 'last' or 'mean'")


@dataclass(frozen=True)
class RegimeDummies:
    months: pd.PeriodIndex
    hike: np.ndarray
    unch: np.ndarray
    cut: np.ndarray

    def column(self, regime):
        return {
            Regime.HIKE: self.hike,
            Regime.UNCHANGED: self.unch,
            Regime.CUT: self.cut,
        }[regime]

    def to_frame(self):
        return pd.DataFrame(
            {"hike": self.hike, "unch": self.unch, "cut": self.cut},
            index=self.months,
        )


@dataclass(frozen=True)
class HorizonResult:
    h: int
    names: tuple
    coef: np.ndarray
    se: np.ndarray
    pvalue: np.ndarray
    identified: np.ndarray
    bands: dict
    residuals: np.ndarray
    nobs: int
    covariance: str

    def get(self, name):
        i = self.names.index(name)
        return self.coef[i], self.se[i], self.pvalue[i]


@dataclass(frozen=True)
class LpResult:
    name: str
    spec: LpSpec
    horizons: tuple

    def to_frame(self):
        rows = []
        for res in self.horizons:
            row = {"h": res.h}
            for regime in Regime:
                i = res.names.index(INTERACTIONS[regime])
                row[f"coef_{regime.label}"] = res.coef[i]
                row[f"se_{regime.label}"] = res.se[i]
                row[f"p_{regime.label}"] = res.pvalue[i]
            for regime in Regime:
                i = res.names.index(INTERACTIONS[regime])
                for level in self.spec.bands:
                    lo, hi = res.bands[level]
                    tag = f"band{int(round(level * 100))}"
                    row[f"{tag}_lo_{regime.label}"] = lo[i]
                    row[f"{tag}_hi_{regime.label}"] = hi[i]
            row["nobs"] = res.nobs
            rows.append(row)
        return pd.DataFrame(rows)


def monthly(series, how="last"):
    """Aggregate a daily series to calendar months."""
    if how not in ("last", "mean"):
        raise ValueError("how must be 'last' or 'mean'")
    series = pd.Series(series).dropna()
    grouped = series.groupby(to_month(series.index))
    out = grouped.last() if how == "last" else grouped.mean()
    out.index = pd.PeriodIndex(out.index, freq="M")
    return out


def _meeting_table(events):
    frame = events.to_frame() if hasattr(events, "to_frame") else events
    frame = pd.DataFrame(frame).sort_values("date").reset_index(drop=True)
    frame["month"] = to_month(frame["date"])
    return frame


def build_dummies(events, shocks, months=None):
    """Monthly hike/unchanged/cut indicators.

    A month gets the dummy of its announcement. An unchanged meeting
    adjacent (previous or next meeting) to a hike whose month carries a
    positive policy shock also gets the hike dummy; cuts mirror this
    with negative shocks.
    """
    months = pd.PeriodIndex(shocks.months if months is None else months)
    s_mp = pd.Series(np.asarray(shocks.s_mp), index=shocks.months)
    s_mp = s_mp.reindex(months).fillna(0.0).to_numpy()
    position = {m: i for i, m in enumerate(months)}
    dummies = {
        d: np.zeros(len(months), dtype=int) for d in ("hike", "unch", "cut")
    }
    meetings = _meeting_table(events)
    for month, group in meetings.groupby("month"):
        decisions = set(group["decision"])
        if {"hike", "cut"} <= decisions:
            raise DataError(f"conflicting hike and cut decisions in {month}")
        if month not in position:
            continue
        i = position[month]
        if "hike" in decisions:
            dummies["hike"][i] = 1
        elif "cut" in decisions:
            dummies["cut"][i] = 1
        else:
            dummies["unch"][i] = 1
    decisions = list(meetings["decision"])
    meeting_months = list(meetings["month"])
    for k, decision in enumerate(decisions):
        if decision != "unchanged" or meeting_months[k] not in position:
            continue
        i = position[meeting_months[k]]
        neighbours = {
            decisions[j] for j in (k - 1, k + 1) if 0 <= j < len(decisions)
        }
        if "hike" in neighbours and s_mp[i] > 0.0:
            dummies["hike"][i] = 1
        if "cut" in neighbours and s_mp[i] < 0.0:
            dummies["cut"][i] = 1
    return RegimeDummies(
        months, dummies["hike"], dummies["unch"], dummies["cut"]
    )


def macro_controls(macro):
    """Monthly log changes (percent) of CPI and industrial production."""
    frame = pd.DataFrame(
        macro.values, index=macro.months, columns=list(macro.names)
    )
    if (frame[["cpi", "indpro"]] <= 0.0).any().any():
        raise DataError("cpi and indpro must be positive")
    out = 100.0 * np.log(frame[["cpi", "indpro"]]).diff()
    out.columns = ["d_cpi", "d_ip"]
    return out


def robust_se(X, residuals, lag):
    """Newey-West standard errors with Bartlett weights and truncation
    ``lag``; HC0 when the HAC matrix is not positive definite.

    Returns ``(se, kind)`` where ``kind`` names the estimator used.
    """
    X = np.asarray(X, dtype=np.float64)
    u = np.asarray(residuals, dtype=np.float64)
    bread = np.linalg.inv(X.T @ X)
    scores = X * u[:, None]
    meat = scores.T @ scores
    hc0 = bread @ meat @ bread
    for lag_l in range(1, lag + 1):
        weight = 1.0 - lag_l / (lag + 1.0)
        gamma = scores[lag_l:].T @ scores[:-lag_l]
        meat = meat + weight * (gamma + gamma.T)
    cov = bread @ meat @ bread
    kind = "hac"
    if np.any(np.diag(cov) <= 0.0) or np.linalg.eigvalsh(
        0.5 * (cov + cov.T)
    )[0] < -1e-12 * max(1.0, np.abs(cov).max()):
        fallback(
            f"Newey-West covariance with lag {lag} is not positive "
            "definite, using HC0",
            logger,
        )
        cov, kind = hc0, "hc0"
    return np.sqrt(np.maximum(np.diag(cov), 0.0)), kind


def pvalues(coef, se):
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.abs(coef) / se
    return np.where(se > 0.0, 2.0 * norm.sf(z), np.nan)


def heat_indicator(coef, p):
    p = np.asarray(p, dtype=np.float64)
    if np.any((p < 0.0) | (p > 1.0)):
        raise ValueError("p-values must lie in [0, 1]")
    return np.sign(coef) * (1.0 - p) ** HEAT_EXPONENT


def _design(index, shocks, dummies, controls, spec):
    months = pd.PeriodIndex(index.index, freq="M")
    frame = pd.DataFrame({"C": index.to_numpy(np.float64)}, index=months)
    s_mp = pd.Series(np.asarray(shocks.s_mp), index=shocks.months)
    frame["S"] = s_mp
    regimes = dummies.to_frame()
    for regime, column in INTERACTIONS.items():
        frame[column] = frame["S"] * regimes[regime.label]
    if spec.controls:
        if controls is None:
            raise ValueError("controls are required when enabled")
        frame = frame.join(controls, how="left")
    frame["lag"] = frame["C"].shift(1)
    return frame.drop(columns=["S"])


def _collinear(X, names):
    offending, rank = [], 0
    for j in range(X.shape[1]):
        new_rank = np.linalg.matrix_rank(X[:, : j + 1])
        if new_rank == rank:
            offending.append(names[j])
        rank = new_rank
    return offending


def lp_regress(index, shocks, dummies, controls, h, spec=None):
    """OLS of ``C_{t+h}`` on the constant, ``C_{t-1}``, the interacted
    policy shocks and the macro controls.

    Interactions whose regime never occurs in the sample are dropped and
    reported as not identified: NaN estimates and ``identified`` False.
    """
    spec = spec or LpSpec()
    frame = _design(index, shocks, dummies, controls, spec)
    frame["lead"] = frame["C"].shift(-h)
    names = [n for n in REGRESSORS if n in frame.columns or n == "const"]
    if not spec.lagged_dependent:
        names.remove("lag")
    if not spec.controls:
        names = [n for n in names if n not in ("d_cpi", "d_ip")]
    frame["const"] = 1.0
    sample = frame[names + ["lead"]].dropna()
    X_all = sample[names].to_numpy(np.float64)
    y = sample["lead"].to_numpy(np.float64)
    identified = np.any(X_all != 0.0, axis=0)
    identified |= ~np.isin(names, list(INTERACTIONS.values()))
    keep = np.flatnonzero(identified)
    X = X_all[:, keep]
    k = X.shape[1]
    if len(y) < MIN_EXTRA_OBS + k:
        raise SampleSizeError(
            f"horizon {h}: {len(y)} observations, "
            f"at least {MIN_EXTRA_OBS + k} are required"
        )
    if np.linalg.matrix_rank(X) < k:
        raise RankError(_collinear(X, [names[j] for j in keep]))
    beta, _, _, _ = np.linalg.lstsq(X, y, rcond=None)
    residuals = y - X @ beta
    se_kept, kind = robust_se(X, residuals, h)
    coef = np.full(len(names), np.nan)
    se = np.full(len(names), np.nan)
    coef[keep] = beta
    se[keep] = se_kept
    p = np.full(len(names), np.nan)
    p[keep] = pvalues(beta, se_kept)
    bands = {}
    for level in spec.bands:
        z = norm.ppf(0.5 + level / 2.0)
        bands[level] = (coef - z * se, coef + z * se)
    logger.debug(
        "lp h=%d nobs=%d k=%d covariance=%s", h, len(y), k, kind
    )
    return HorizonResult(
        h=h,
        names=tuple(names),
        coef=coef,
        se=se,
        pvalue=p,
        identified=identified,
        bands=bands,
        residuals=residuals,
        nobs=len(y),
        covariance=kind,
    )


def run_local_projections(index, shocks, dummies, controls, spec, name):
    horizons = tuple(
        lp_regress(index, shocks, dummies, controls, h, spec)
        for h in range(spec.h_max + 1)
    )
    logger.info("lp index=%s horizons=%d", name, len(horizons))
    return LpResult(name, spec, horizons)


def heat_table(results):
    """Long ``node,h,regime,s`` table; not-identified cells are left
    empty."""
    rows = []
    for node, result in results.items():
        for res in result.horizons:
            for regime in Regime:
                i = res.names.index(INTERACTIONS[regime])
                s = (
                    float(heat_indicator(res.coef[i], res.pvalue[i]))
                    if res.identified[i]
                    else np.nan
                )
                rows.append(
                    {"node": node, "h": res.h, "regime": regime.label, "s": s}
                )
    return pd.DataFrame(rows, columns=["node", "h", "regime", "s"])


def write_lp(result, path):
    return write_csv(result.to_frame(), path)


def write_heat(results, path):
    return write_csv(heat_table(results), path)


def write_dummies(dummies, path):
    frame = dummies.to_frame().reset_index(drop=True)
    frame.insert(0, "month", format_months(dummies.months))
    return write_csv(frame, path)
