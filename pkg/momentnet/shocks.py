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

"""Monetary policy and information shocks from monthly FOMC surprises.

The monthly system stacks the surprises ``m_t = (rate, stock)`` over the
macro block ``y_t``. Surprise equations are white noise; the macro block
loads on lags of both. The 2x2 surprise block of the error covariance is
rotated until the impact columns match the policy pattern (rate up,
stocks down) and the information pattern (rate up, stocks up).
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import linalg as sla
from scipy.stats import invwishart

from momentnet.errors import (
    DataError,
    EstimationError,
    IdentificationError,
    SampleSizeError,
)
from momentnet.io import read_csv, write_csv
from momentnet.linalg import cholesky
from momentnet.random import generators
from momentnet.utils import fallback, format_months, lagged_design, to_month

logger = logging.getLogger(__name__)

SURPRISE_COLUMNS = ["date", "fff_surprise", "spx_surprise"]
MACRO_COLUMNS = ["month", "gs1", "spx", "cpi", "ebp", "indpro"]
SHOCK_COLUMNS = ["month", "s_total", "s_mp", "s_if", "n_accepted"]


@dataclass(frozen=True)
class SurprisePanel:
    months: pd.PeriodIndex
    values: np.ndarray
    names: tuple = ("fff_surprise", "spx_surprise")


@dataclass(frozen=True)
class MacroPanel:
    months: pd.PeriodIndex
    values: np.ndarray
    names: tuple = tuple(MACRO_COLUMNS[1:])

    def aligned(self, surprises):
        """Both panels restricted to their common months."""
        common = self.months.intersection(surprises.months).sort_values()
        if len(common) == 0:
            raise DataError("surprises and macro data share no months")
        mi = self.months.get_indexer(common)
        si = surprises.months.get_indexer(common)
        return (
            SurprisePanel(common, surprises.values[si], surprises.names),
            MacroPanel(common, self.values[mi], self.names),
        )


@dataclass(frozen=True)
class PosteriorDraws:
    """Reduced-form posterior draws.

    ``coef`` has shape ``(draws, 1 + K * p, K)`` in the regressor order
    ``[1, z_{t-1}', ..., z_{t-p}']`` with ``z = (m, y)``; the surprise
    columns are zero.
    """

    sigma: np.ndarray
    coef: np.ndarray
    p: int
    n_surprises: int = 2

    def __len__(self):
        return self.sigma.shape[0]

    def lag_matrices(self, k):
        """Intercept and ``(p, K, K)`` lag matrices of draw ``k``."""
        K = self.sigma.shape[1]
        c = self.coef[k, 0]
        B = self.coef[k, 1:].reshape(self.p, K, K).transpose(0, 2, 1)
        return c, B


@dataclass(frozen=True)
class StructuralDraws:
    impact: np.ndarray
    draw_index: np.ndarray
    angles: np.ndarray
    trials: int

    def __len__(self):
        return self.impact.shape[0]


@dataclass(frozen=True)
class ShockSeries:
    months: pd.PeriodIndex
    s_total: np.ndarray
    s_mp: np.ndarray
    s_if: np.ndarray
    n_accepted: int
    sign_conflict: np.ndarray

    def to_frame(self):
        return pd.DataFrame(
            {
                "month": format_months(self.months),
                "s_total": self.s_total,
                "s_mp": self.s_mp,
                "s_if": self.s_if,
                "n_accepted": self.n_accepted,
            },
            columns=SHOCK_COLUMNS,
        )


def aggregate_surprises(events, months=None):
    """Monthly sums of per-meeting surprises, zero in months without a
    meeting. ``months`` fixes the output calendar."""
    frame = pd.DataFrame(events).copy()
    missing = set(SURPRISE_COLUMNS) - set(frame.columns)
    if missing:
        raise DataError(f"surprises lack columns {sorted(missing)}")
    frame["date"] = pd.to_datetime(frame["date"])
    if frame["date"].duplicated().any():
        dup = frame.loc[frame["date"].duplicated(), "date"].iloc[0]
        raise DataError(f"duplicate meeting record on {dup.date()}")
    frame["month"] = to_month(frame["date"])
    sums = frame.groupby("month")[SURPRISE_COLUMNS[1:]].sum()
    if months is None:
        months = pd.period_range(sums.index.min(), sums.index.max(), freq="M")
    sums = sums.reindex(pd.PeriodIndex(months), fill_value=0.0).sort_index()
    return SurprisePanel(
        pd.PeriodIndex(sums.index), sums.to_numpy(np.float64)
    )


def fit_restricted_bvar(
    m,
    y,
    p=12,
    draws=1000,
    seed=0,
    prior_scale=0.1,
    prior_precision=1e-4,
):
    """Posterior draws of the block-restricted monthly VAR.

    The covariance is drawn from its inverse-Wishart posterior around
    the restricted least-squares residuals; the macro coefficients are
    then drawn conditional on the surprise errors.
    """
    m = np.asarray(m, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if m.ndim == 1:
        m = m[:, None]
    T, q = m.shape
    n = y.shape[1]
    K = q + n
    if T <= 7 * p + 20:
        raise SampleSizeError(
            f"{T} months are too few for a VAR with {p} lags"
        )
    target, X = lagged_design(np.hstack([m, y]), p)
    M, Y = target[:, :q], target[:, q:]
    T_eff, k = X.shape
    if np.linalg.matrix_rank(X) < k:
        raise EstimationError(
            f"regressor matrix of rank {np.linalg.matrix_rank(X)} < {k}"
        )
    precision = X.T @ X + prior_precision * np.eye(k)
    factor = sla.cho_factor(precision, lower=True)
    ols = sla.cho_solve(factor, X.T @ Y)
    U = np.hstack([M, Y - X @ ols])
    S = U.T @ U
    scale = S + prior_scale * S / T_eff
    df = T_eff + K + 2
    root = np.linalg.cholesky(sla.cho_solve(factor, np.eye(k)))
    sigma = np.empty((draws, K, K))
    coef = np.zeros((draws, k, K))
    for d, rng in enumerate(generators(seed, draws, "bvar")):
        sig = invwishart.rvs(df=df, scale=scale, random_state=rng)
        sig = np.atleast_2d(sig)
        sig = 0.5 * (sig + sig.T)
        gamma = np.linalg.solve(sig[:q, :q], sig[:q, q:])
        cond = sig[q:, q:] - sig[q:, :q] @ gamma
        mean = sla.cho_solve(factor, X.T @ (Y - M @ gamma))
        noise = rng.standard_normal((k, n))
        coef[d, :, q:] = mean + root @ noise @ np.linalg.cholesky(cond).T
        sigma[d] = sig
    logger.info(
        "bvar months=%d p=%d draws=%d df=%d", T_eff, p, draws, df
    )
    return PosteriorDraws(sigma, coef, p, q)


def rotation(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def sign_normalize(impact):
    """Flip columns so that every shock raises the rate."""
    signs = np.where(impact[0] < 0.0, -1.0, 1.0)
    return impact * signs[None, :]


def satisfies_signs(impact):
    """Column 0 is (rate +, stock -); column 1 is (rate +, stock +)."""
    return bool(
        impact[0, 0] > 0.0
        and impact[1, 0] < 0.0
        and impact[0, 1] > 0.0
        and impact[1, 1] > 0.0
    )


def identify_signs(draws, angles=100, seed=0):
    """First accepted rotation of every posterior draw."""
    impacts, index, thetas = [], [], []
    sigmas = draws.sigma if hasattr(draws, "sigma") else np.asarray(draws)
    q = getattr(draws, "n_surprises", 2)
    for d, rng in enumerate(generators(seed, len(sigmas), "rotation")):
        chol = cholesky(sigmas[d][:q, :q])
        for _ in range(angles):
            theta = rng.uniform(0.0, 2.0 * math.pi)
            impact = sign_normalize(chol @ rotation(theta))
            if satisfies_signs(impact):
                impacts.append(impact)
                index.append(d)
                thetas.append(theta)
                break
    if not impacts:
        raise IdentificationError(
            f"no rotation satisfied the sign restrictions in "
            f"{len(sigmas)} draws x {angles} angles"
        )
    logger.info("identified accepted=%d draws=%d", len(impacts), len(sigmas))
    return StructuralDraws(
        np.stack(impacts), np.array(index), np.array(thetas), len(sigmas)
    )


def contributions(impact, m):
    """Policy and information parts of the rate surprise for one
    structural draw."""
    if abs(np.linalg.det(impact)) < 1e-14 * max(1.0, np.abs(impact).max()):
        raise EstimationError("impact matrix is singular")
    eps = np.linalg.solve(impact, np.asarray(m, dtype=np.float64).T)
    return impact[0, 0] * eps[0], impact[0, 1] * eps[1]


def decompose_shocks(identified, m, months, min_accepted=100):
    m = np.asarray(m, dtype=np.float64)
    n = len(identified)
    if n < min_accepted:
        fallback(
            f"only {n} accepted draws, fewer than {min_accepted}", logger
        )
    parts = [contributions(impact, m) for impact in identified.impact]
    mp = np.median(np.stack([p[0] for p in parts]), axis=0)
    info = np.median(np.stack([p[1] for p in parts]), axis=0)
    total = m[:, 0]
    conflict = mp * info < 0.0
    raw = mp + info
    with np.errstate(divide="ignore", invalid="ignore"):
        share = np.where(np.abs(raw) > 1e-300, mp / raw, 0.5)
    s_mp = np.where(total == 0.0, 0.0, share * total)
    s_if = total - s_mp
    logger.debug(
        "decompose months=%d conflicts=%d", len(total), int(conflict.sum())
    )
    return ShockSeries(
        pd.PeriodIndex(months), total, s_mp, s_if, n, conflict
    )


def read_surprises(path):
    frame = read_csv(path, stage="shocks")
    if list(frame.columns) != SURPRISE_COLUMNS:
        raise DataError(f"{path}: header must be {','.join(SURPRISE_COLUMNS)}")
    try:
        frame["date"] = pd.to_datetime(frame["date"], format="%Y-%m-%d")
    except (ValueError, TypeError) as e:
        raise DataError(f"{path}: dates must be YYYY-MM-DD: {e}")
    return frame


def read_macro(path):
    frame = read_csv(path, stage="shocks")
    if list(frame.columns) != MACRO_COLUMNS:
        raise DataError(f"{path}: header must be {','.join(MACRO_COLUMNS)}")
    months = pd.PeriodIndex(frame["month"].astype(str), freq="M")
    if months.has_duplicates or not months.is_monotonic_increasing:
        raise DataError(f"{path}: months must be unique and increasing")
    return MacroPanel(months, frame[MACRO_COLUMNS[1:]].to_numpy(np.float64))


def write_shocks(shocks, path):
    return write_csv(shocks.to_frame(), path)


def read_shocks(path):
    frame = read_csv(path, stage="shocks")
    if list(frame.columns) != SHOCK_COLUMNS:
        raise DataError(f"{path}: header must be {','.join(SHOCK_COLUMNS)}")
    months = pd.PeriodIndex(frame["month"].astype(str), freq="M")
    s_mp = frame["s_mp"].to_numpy(np.float64)
    s_if = frame["s_if"].to_numpy(np.float64)
    return ShockSeries(
        months,
        frame["s_total"].to_numpy(np.float64),
        s_mp,
        s_if,
        int(frame["n_accepted"].iloc[0]) if len(frame) else 0,
        s_mp * s_if < 0.0,
    )
