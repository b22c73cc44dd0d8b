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

"""Synthetic datasets with known ground truth.

Daily returns follow a block VAR(1) of bond-like and equity-like series
whose cross-block coupling switches on for a few days after each policy
meeting. Monthly surprises are generated from orthogonal policy and
information shocks with the impact signs the identification expects,
and the macro block loads on lagged surprises only.
"""

import logging
import os
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd

from momentnet.config import DECISIONS
from momentnet.errors import ConfigError, UnstableConfigError
from momentnet.io import ensure_dir, write_csv, write_json
from momentnet.linalg import spectral_radius
from momentnet.random import generator
from momentnet.shocks import (
    MACRO_COLUMNS,
    SURPRISE_COLUMNS,
    MacroPanel,
    aggregate_surprises,
)
from momentnet.timeseries import EventCalendar, PricePanel
from momentnet.utils import format_dates, format_months, to_month

logger = logging.getLogger(__name__)

BURN_IN = 200
INITIAL_PRICE = 100.0
# Meeting months of an eight-meeting year
MEETING_MONTHS = (1, 3, 4, 6, 7, 9, 10, 12)
BLOCK_NAMES = ("bond", "equity")


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    n_series: int = 9
    n_days: int = 2000
    n_months: int = 400
    blocks: tuple = (5, 4)
    start: str = "2010-01-04"
    # daily block VAR
    own: float = 0.1
    within: float = 0.15
    cross: float = 0.0
    event_cross: float = 0.1
    event_days: int = 5
    event_vol: float = 1.5
    vol: float = 1.0
    correlation: float = 0.6
    # policy meetings
    persistence: float = 0.8
    # monthly surprises and macro block
    rate_scale: float = 0.05
    stock_scale: float = 0.5
    stock_loading: float = 1.0
    mp_scale: float = 1.0
    if_scale: float = 1.0
    surprise_noise: float = 0.05
    macro_ar: float = 0.9
    macro_loading: float = 0.5
    categories: dict = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(int(b) for b in self.blocks))
        if sum(self.blocks) != self.n_series:
            raise ConfigError(
                f"blocks {list(self.blocks)} do not add up to n_series="
                f"{self.n_series}",
                field="data.synthetic",
            )
        if len(self.blocks) > len(BLOCK_NAMES) or min(self.blocks) < 1:
            raise ConfigError(
                "at most two nonempty blocks (bond, equity) are supported",
                field="data.synthetic",
            )
        if self.n_days < 3 or self.n_months < 2:
            raise ConfigError(
                "n_days must be >= 3 and n_months >= 2",
                field="data.synthetic",
            )
        for name in ("vol", "rate_scale", "stock_scale", "stock_loading"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(
                    f"{name} must be positive", field="data.synthetic"
                )
        for name in ("mp_scale", "if_scale", "surprise_noise"):
            if getattr(self, name) < 0.0:
                raise ConfigError(
                    f"{name} must be nonnegative", field="data.synthetic"
                )
        if not 0.0 <= self.persistence < 1.0:
            raise ConfigError(
                "persistence must lie in [0, 1)", field="data.synthetic"
            )
        if self.categories is None:
            object.__setattr__(self, "categories", self.default_categories())

    @classmethod
    def from_config(cls, section, seed=0):
        """Build from the ``data.synthetic`` section of a run config."""
        known = set(cls.__dataclass_fields__)
        unknown = set(section) - known
        if unknown:
            raise ConfigError(
                f"unknown synthetic settings {sorted(unknown)}",
                field="data.synthetic",
            )
        return cls(**{"seed": seed, **section})

    @property
    def names(self):
        names = []
        for block, size in zip(BLOCK_NAMES, self.blocks):
            names.extend(f"{block}_{i + 1}" for i in range(size))
        return tuple(names)

    def default_categories(self):
        return {name: name.rsplit("_", 1)[0] for name in self.names}

    def block_of(self):
        return np.repeat(np.arange(len(self.blocks)), self.blocks)

    def coefficients(self, event=False):
        """VAR(1) matrix in the calm or the post-meeting regime."""
        block = self.block_of()
        same = block[:, None] == block[None, :]
        sizes = np.asarray(self.blocks)[block]
        N = self.n_series
        cross = self.cross + (self.event_cross if event else 0.0)
        B = np.zeros((N, N))
        for i in range(N):
            for j in range(N):
                if i == j:
                    B[i, j] = self.own
                elif same[i, j]:
                    B[i, j] = self.within / max(sizes[i] - 1, 1)
                else:
                    B[i, j] = cross / (N - sizes[i])
        return B

    def covariance(self):
        block = self.block_of()
        same = (block[:, None] == block[None, :]).astype(np.float64)
        corr = (1.0 - self.correlation) * np.eye(self.n_series)
        corr += self.correlation * same
        return self.vol**2 * corr

    def impact(self):
        """Impact of (policy, information) shocks on (rate, stock)."""
        a_mp = self.rate_scale * self.mp_scale
        a_if = self.rate_scale * self.if_scale
        k = self.stock_loading * self.stock_scale / self.rate_scale
        return np.array([[a_mp, a_if], [-k * a_mp, k * a_if]])

    def macro_coefficients(self):
        """``(A, G)``: macro own lags and loadings on lagged surprises."""
        n = len(MACRO_COLUMNS) - 1
        A = self.macro_ar * np.eye(n)
        G = np.zeros((n, 2))
        # rate, stocks and spreads respond to the rate surprise
        G[:, 0] = self.macro_loading * np.array([1.0, -1.0, -0.2, 0.5, -0.3])
        G[:, 1] = self.macro_loading * np.array([0.2, 1.0, 0.1, -0.3, 0.2])
        return A, G

    def validate(self):
        """Reject unstable coefficient sets and singular covariances.

        Returns the largest spectral radius over the daily regimes and the
        macro block."""
        radii = [
            spectral_radius([self.coefficients(event)])
            for event in (False, True)
        ]
        radii.append(spectral_radius([self.macro_coefficients()[0]]))
        radius = max(radii)
        if not radius < 1.0:
            raise UnstableConfigError(radius)
        try:
            np.linalg.cholesky(self.covariance())
        except np.linalg.LinAlgError:
            raise ConfigError(
                f"correlation {self.correlation} gives a covariance that "
                "is not positive definite",
                field="data.synthetic",
            )
        return radius

    def to_dict(self):
        out = asdict(self)
        out["blocks"] = list(self.blocks)
        return out


@dataclass(frozen=True)
class ShockDataset:
    meetings: pd.DataFrame
    surprises: object
    macro: MacroPanel
    s_mp: np.ndarray
    s_if: np.ndarray


def month_span(config):
    end = to_month(pd.bdate_range(config.start, periods=config.n_days))[-1]
    return pd.period_range(end=end, periods=config.n_months, freq="M")


def gen_calendar(config):
    """Eight meetings a year over the monthly span with Markov decisions.

    Meetings fall on the first business day after the 14th of a meeting
    month."""
    months = month_span(config)
    dates = [
        pd.Timestamp(year=m.year, month=m.month, day=14) + pd.offsets.BDay()
        for m in months
        if m.month in MEETING_MONTHS
    ]
    rng = generator(config.seed, "synth", "decisions")
    states = list(DECISIONS)
    decisions = []
    current = "unchanged"
    for _ in dates:
        if rng.uniform() >= config.persistence:
            current = states[rng.integers(len(states))]
        decisions.append(current)
    return EventCalendar(pd.DatetimeIndex(dates), tuple(decisions))


def event_mask(dates, events, days):
    """True on the ``days`` trading days starting at each meeting."""
    position = np.searchsorted(dates.values, events.dates.values)
    mask = np.zeros(len(dates), dtype=bool)
    for start in position:
        if start < len(dates):
            mask[start : start + days] = True
    return mask


def gen_price_panel(config, events=None):
    """Simulate the daily panel; returns ``(PricePanel, truth)``."""
    radius = config.validate()
    events = events if events is not None else gen_calendar(config)
    dates = pd.bdate_range(config.start, periods=config.n_days)
    mask = event_mask(dates[1:], events, config.event_days)
    B_calm = config.coefficients(False)
    B_event = config.coefficients(True)
    chol = np.linalg.cholesky(config.covariance())
    rng = generator(config.seed, "synth", "prices")
    T, N = config.n_days - 1, config.n_series
    noise = rng.standard_normal((BURN_IN + T, N)) @ chol.T
    r = np.zeros(N)
    returns = np.empty((T, N))
    for t in range(BURN_IN + T):
        event = t >= BURN_IN and mask[t - BURN_IN]
        B = B_event if event else B_calm
        scale = config.event_vol if event else 1.0
        r = B @ r + scale * noise[t]
        if t >= BURN_IN:
            returns[t - BURN_IN] = r
    log_prices = np.vstack(
        [np.zeros((1, N)), np.cumsum(returns / 100.0, axis=0)]
    )
    prices = INITIAL_PRICE * np.exp(log_prices)
    logger.info(
        "synth prices days=%d series=%d radius=%.4f event_days=%d",
        config.n_days,
        N,
        radius,
        int(mask.sum()),
    )
    truth = {
        "coefficients_calm": B_calm,
        "coefficients_event": B_event,
        "covariance": config.covariance(),
        "spectral_radius": radius,
        "event_days": format_dates(dates[1:][mask]).tolist(),
        "categories": config.categories,
    }
    return PricePanel(dates, prices, config.names), truth


def gen_shock_dataset(config, events=None):
    """Meeting-level surprises, monthly panels and the true monthly
    policy and information parts of the rate surprise."""
    config.validate()
    events = events if events is not None else gen_calendar(config)
    months = month_span(config)
    rng = generator(config.seed, "synth", "shocks")
    n = len(events)
    eps = rng.standard_normal((n, 2))
    impact = config.impact()
    m = eps @ impact.T
    m += config.surprise_noise * np.array(
        [config.rate_scale, config.stock_scale]
    ) * rng.standard_normal((n, 2))
    meetings = pd.DataFrame(
        {
            "date": events.dates,
            SURPRISE_COLUMNS[1]: m[:, 0],
            SURPRISE_COLUMNS[2]: m[:, 1],
        }
    )
    surprises = aggregate_surprises(meetings, months)
    parts = pd.DataFrame(
        {
            "month": to_month(events.dates),
            "mp": impact[0, 0] * eps[:, 0],
            "if": impact[0, 1] * eps[:, 1],
        }
    ).groupby("month")[["mp", "if"]].sum()
    parts = parts.reindex(months, fill_value=0.0)
    macro = _gen_macro(config, surprises.values, rng)
    logger.info(
        "synth shocks months=%d meetings=%d", len(months), n
    )
    return ShockDataset(
        meetings,
        surprises,
        MacroPanel(months, macro),
        parts["mp"].to_numpy(),
        parts["if"].to_numpy(),
    )


def _gen_macro(config, m, rng):
    A, G = config.macro_coefficients()
    units = np.array([config.rate_scale, config.stock_scale])
    T, n = m.shape[0], A.shape[0]
    x = np.zeros(n)
    states = np.empty((T, n))
    for t in range(BURN_IN + T):
        lagged = m[t - BURN_IN - 1] if t > BURN_IN else np.zeros(2)
        x = A @ x + G @ (lagged / units) + 0.1 * (
            rng.standard_normal(n)
        )
        if t >= BURN_IN:
            states[t - BURN_IN] = x
    # gs1 and ebp are levels; spx, cpi and indpro are indices
    gs1 = 3.0 + states[:, 0]
    spx = 1000.0 * np.exp(np.cumsum(0.5 + states[:, 1]) / 100.0)
    cpi = 100.0 * np.exp(np.cumsum(0.2 + 0.1 * states[:, 2]) / 100.0)
    ebp = 0.3 * states[:, 3]
    indpro = 100.0 * np.exp(np.cumsum(0.1 + 0.5 * states[:, 4]) / 100.0)
    return np.column_stack([gs1, spx, cpi, ebp, indpro])


def write_dataset(out_dir, config):
    """Write the CSV inputs of the pipeline plus ``truth.json``."""
    ensure_dir(out_dir)
    events = gen_calendar(config)
    panel, price_truth = gen_price_panel(config, events)
    shocks = gen_shock_dataset(config, events)
    prices = panel.to_frame()
    prices.insert(0, "date", format_dates(panel.dates))
    meetings = shocks.meetings.copy()
    meetings["date"] = format_dates(pd.DatetimeIndex(meetings["date"]))
    macro = pd.DataFrame(shocks.macro.values, columns=MACRO_COLUMNS[1:])
    macro.insert(0, "month", format_months(shocks.macro.months))
    calendar = events.to_frame()
    calendar["date"] = format_dates(events.dates)
    paths = {
        "prices": write_csv(prices, os.path.join(out_dir, "prices.csv")),
        "events": write_csv(
            calendar, os.path.join(out_dir, "fomc_events.csv")
        ),
        "surprises": write_csv(
            meetings, os.path.join(out_dir, "surprises.csv")
        ),
        "macro": write_csv(macro, os.path.join(out_dir, "macro.csv")),
    }
    truth = {
        "config": config.to_dict(),
        "prices": price_truth,
        "shocks": {
            "impact": config.impact(),
            "months": format_months(shocks.macro.months),
            "s_mp": shocks.s_mp,
            "s_if": shocks.s_if,
            "macro_coefficients": dict(
                zip(("A", "G"), config.macro_coefficients())
            ),
        },
    }
    paths["truth"] = write_json(truth, os.path.join(out_dir, "truth.json"))
    logger.info("synth dataset dir=%s", out_dir)
    return paths
