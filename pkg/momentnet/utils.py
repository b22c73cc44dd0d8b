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

import logging
import warnings

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)


def fallback(message, logger=logger):
    """Report a recoverable numerical fallback both as a RuntimeWarning
    and as a log record."""
    logger.warning(message)
    warnings.warn(message, stacklevel=3, category=RuntimeWarning)


def all_finite(*arrays):
    return all(np.all(np.isfinite(np.asarray(a))) for a in arrays)


def lagged_design(y, p, intercept=True):
    """Rows ``x_t = [1, y_{t-1}, ..., y_{t-p}]`` for ``t = p .. T-1``.

    Returns ``(Y, X)`` with ``Y = y[p:]``.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 1:
        y = y[:, None]
    T = y.shape[0]
    blocks = [y[p - lag : T - lag] for lag in range(1, p + 1)]
    if intercept:
        blocks.insert(0, np.ones((T - p, 1)))
    return y[p:], np.hstack(blocks)


def ols(y, X):
    """Least squares fit returning ``(coef, residuals, rank)``."""
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    return coef, y - X @ coef, rank


def to_month(dates):
    """Calendar months of ``dates`` as a ``pd.PeriodIndex``."""
    return pd.DatetimeIndex(dates).to_period("M")


def format_months(months):
    return [str(m) for m in months]


def format_dates(index):
    """ISO strings for a date index; other indexes are stringified."""
    if isinstance(index, pd.DatetimeIndex):
        return np.asarray(index.strftime("%Y-%m-%d"), dtype=object)
    return np.asarray([str(x) for x in index], dtype=object)
