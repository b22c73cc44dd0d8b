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

"""Time-varying parameter VAR with forgetting-factor Kalman filtering
and the generalized forecast error variance decomposition."""

import functools
import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from opt_einsum import contract

from momentnet.errors import (
    DataError,
    DomainError,
    FilterDivergenceError,
    SampleSizeError,
)
from momentnet.io import read_csv, write_csv
from momentnet.linalg import is_psd, solve_spd, symmetrize
from momentnet.runtime import runtime
from momentnet.utils import format_dates, lagged_design, ols

logger = logging.getLogger(__name__)

INTERCEPT_VARIANCE = 100.0
SIGMA_WINDOW = 60


@dataclass(frozen=True)
class TvpVarSpec:
    N: int
    p: int = 1
    forgetting: float = 0.99
    ewma: float = 0.99
    shrinkage: float = 0.01
    horizon: int = 12
    max_condition: float = 1e12

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if self.p < 1:
            raise ValueError("lag order p must be at least 1")
        if not 0.0 < self.forgetting <= 1.0:
            raise ValueError("forgetting factor must lie in (0, 1]")
        if not 0.0 < self.ewma < 1.0:
            raise ValueError("EWMA decay must lie in (0, 1)")
        if not self.shrinkage > 0.0:
            raise ValueError("shrinkage must be positive")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")

    @property
    def n_regressors(self):
        return self.N * self.p + 1

    @property
    def n_states(self):
        return self.N * self.n_regressors

    @classmethod
    def from_config(cls, N, section, p=None):
        return cls(
            N=N,
            p=p if p is not None else (section.get("lag") or 1),
            forgetting=section["forgetting"],
            ewma=section["ewma"],
            shrinkage=section["shrinkage"],
            horizon=section["horizon"],
            max_condition=section["max_condition"],
        )


@dataclass(frozen=True)
class FilterState:
    beta: np.ndarray
    P: np.ndarray
    sigma: np.ndarray
    residual: np.ndarray = None
    F: np.ndarray = None
    gain: np.ndarray = None
    condition: float = float("nan")


@dataclass(frozen=True)
class FilterPath:
    """Filtered quantities for every date ``p .. T-1`` of the input."""

    dates: pd.DatetimeIndex
    names: tuple
    spec: TvpVarSpec
    beta: np.ndarray
    P_diag: np.ndarray
    P_min_eig: np.ndarray
    P_final: np.ndarray
    sigma: np.ndarray
    residuals: np.ndarray
    F: np.ndarray
    condition: np.ndarray

    def __len__(self):
        return self.beta.shape[0]

    def coefficients(self, t):
        return var_coefficients(self.beta[t], self.spec.N, self.spec.p)

    def diagnostics(self):
        spec = self.spec
        return {
            "N": spec.N,
            "p": spec.p,
            "forgetting": spec.forgetting,
            "ewma": spec.ewma,
            "shrinkage": spec.shrinkage,
            "horizon": spec.horizon,
            "dates": len(self),
            "max_condition": float(np.max(self.condition)),
            "min_P_eigenvalue": float(np.min(self.P_min_eig)),
            "condition_limit": spec.max_condition,
        }


@dataclass(frozen=True)
class GfevdTable:
    theta: np.ndarray
    d: np.ndarray


@dataclass(frozen=True)
class GfevdPath:
    dates: pd.DatetimeIndex
    names: tuple
    theta: np.ndarray
    d: np.ndarray

    def to_frame(self):
        """Long format; ``from`` is the sender ``j`` and ``to`` the
        receiver ``i`` of the share ``d_ij``."""
        T, N, _ = self.d.shape
        names = np.asarray(self.names, dtype=object)
        return pd.DataFrame(
            {
                "date": np.repeat(format_dates(self.dates), N * N),
                "from": np.tile(np.tile(names, N), T),
                "to": np.tile(np.repeat(names, N), T),
                "share": self.d.reshape(-1),
            }
        )


def minnesota_prior(N, p, shrinkage):
    """Zero prior mean and diagonal prior variances laid out per equation
    as ``(c_i, B_1[i, :], ..., B_p[i, :])``."""
    per_equation = np.concatenate(
        [[INTERCEPT_VARIANCE]]
        + [np.full(N, shrinkage / lag**2) for lag in range(1, p + 1)]
    )
    variances = np.tile(per_equation, N)
    return np.zeros_like(variances), variances


def regressors(Y, t, p):
    """``x_t = [1, y_{t-1}', ..., y_{t-p}']``."""
    return np.concatenate([[1.0]] + [Y[t - lag] for lag in range(1, p + 1)])


def kalman_step(y, x, state, spec, index=None):
    N = spec.N
    P_pred = state.P / spec.forgetting
    Z = np.kron(np.eye(N), x[None, :])
    residual = y - Z @ state.beta
    sigma = spec.ewma * state.sigma + (1.0 - spec.ewma) * np.outer(
        residual, residual
    )
    ZP = Z @ P_pred
    F = symmetrize(ZP @ Z.T + sigma)
    gain_t, cond = solve_spd(
        F,
        ZP,
        max_condition=spec.max_condition,
        index=index,
        return_condition=True,
    )
    gain = gain_t.T
    beta = state.beta + gain @ residual
    P = symmetrize(P_pred - gain @ ZP)
    return FilterState(beta, P, sigma, residual, F, gain, cond)


def _as_panel(panel, dates=None, names=None):
    if hasattr(panel, "values") and hasattr(panel, "dates"):
        return (
            np.asarray(panel.values, dtype=np.float64),
            pd.DatetimeIndex(panel.dates),
            tuple(panel.names),
        )
    values = np.asarray(panel, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    if dates is None:
        dates = pd.RangeIndex(values.shape[0])
    if names is None:
        names = tuple(f"y{i}" for i in range(values.shape[1]))
    return values, dates, tuple(names)


def initial_sigma(Y):
    n0 = max(min(SIGMA_WINDOW, Y.shape[0] // 4), Y.shape[1] + 1)
    return np.atleast_2d(np.cov(Y[:n0], rowvar=False))


def fit_tvpvar(panel, spec, prior_cov=None, dates=None, names=None):
    """Filter the whole sample; ``prior_cov`` overrides the Minnesota
    prior covariance."""
    Y, dates, names = _as_panel(panel, dates, names)
    T, N = Y.shape
    if N != spec.N:
        raise ValueError(f"spec is for N={spec.N}, data has {N} columns")
    if T <= N * spec.p + 10:
        raise SampleSizeError(
            f"{T} observations are too few for N={N}, p={spec.p}"
        )
    beta0, v0 = minnesota_prior(N, spec.p, spec.shrinkage)
    P0 = np.diag(v0) if prior_cov is None else np.asarray(prior_cov)
    state = FilterState(beta0, P0, initial_sigma(Y))
    n = T - spec.p
    k = spec.n_states
    beta = np.empty((n, k))
    P_diag = np.empty((n, k))
    P_min_eig = np.empty(n)
    sigma = np.empty((n, N, N))
    residuals = np.empty((n, N))
    F = np.empty((n, N, N))
    condition = np.empty(n)
    for s, t in enumerate(range(spec.p, T)):
        x = regressors(Y, t, spec.p)
        state = kalman_step(Y[t], x, state, spec, index=t)
        beta[s] = state.beta
        if not is_psd(state.P):
            raise FilterDivergenceError(
                t, "state covariance is not positive semi-definite"
            )
        P_diag[s] = np.diag(state.P)
        P_min_eig[s] = np.linalg.eigvalsh(state.P)[0]
        sigma[s] = state.sigma
        residuals[s] = state.residual
        F[s] = state.F
        condition[s] = state.condition
    logger.info(
        "tvpvar N=%d p=%d dates=%d max_condition=%.3e",
        N,
        spec.p,
        n,
        condition.max(),
    )
    return FilterPath(
        dates=dates[spec.p :],
        names=names,
        spec=spec,
        beta=beta,
        P_diag=P_diag,
        P_min_eig=P_min_eig,
        P_final=state.P,
        sigma=sigma,
        residuals=residuals,
        F=F,
        condition=condition,
    )


def select_lag(panel, p_max):
    """BIC lag choice over constant-coefficient OLS VARs fitted on the
    common sample that starts after ``p_max`` presample rows."""
    if p_max < 1:
        raise ValueError("p_max must be at least 1")
    Y, _, _ = _as_panel(panel)
    T, N = Y.shape
    T_eff = T - p_max
    if T_eff <= N * p_max + 1 + N:
        raise SampleSizeError(
            f"{T} observations are too few for lag selection up to {p_max}"
        )
    _, X_full = lagged_design(Y, p_max)
    target = Y[p_max:]
    scores = []
    for p in range(1, p_max + 1):
        X = X_full[:, : 1 + N * p]
        _, U, rank = ols(target, X)
        if rank < X.shape[1]:
            raise DomainError(f"rank-deficient lag design at p={p}")
        sign, logdet = np.linalg.slogdet(U.T @ U / T_eff)
        if sign <= 0:
            raise DomainError(f"singular residual covariance at p={p}")
        k = N * N * p + N
        scores.append(logdet + k * math.log(T_eff) / T_eff)
    p = int(np.argmin(scores)) + 1
    logger.debug("select_lag bic=%s p=%d", np.round(scores, 6).tolist(), p)
    return p


def var_coefficients(beta, N, p):
    """Split a state vector into the intercept and ``(p, N, N)`` lag
    matrices."""
    M = np.asarray(beta).reshape(N, N * p + 1)
    B = M[:, 1:].reshape(N, p, N).transpose(1, 0, 2)
    return M[:, 0].copy(), B.copy()


def vma_expand(coefs, H):
    """``Psi_0 = I`` and ``Psi_h = sum_k B_k Psi_{h-k}`` for
    ``h < H``."""
    coefs = np.asarray(coefs, dtype=np.float64)
    p, N, _ = coefs.shape
    psi = np.zeros((H, N, N))
    psi[0] = np.eye(N)
    for h in range(1, H):
        for k in range(1, min(h, p) + 1):
            psi[h] += coefs[k - 1] @ psi[h - k]
    return psi


def gfevd(psi, sigma):
    sigma = np.asarray(sigma, dtype=np.float64)
    scale = np.diag(sigma)
    if np.any(~(scale > 0.0)):
        raise DomainError("error covariance has a nonpositive variance")
    A = contract("hik,kj->hij", psi, sigma)
    numerator = contract("hij,hij->ij", A, A) / scale[None, :]
    denominator = contract("hik,hik->i", A, psi)
    if np.any(~(denominator > 0.0)):
        raise DomainError("forecast error variance is zero")
    theta = numerator / denominator[:, None]
    return GfevdTable(theta, theta / theta.sum(axis=1, keepdims=True))


def _gfevd_at(t, path, H):
    _, B = path.coefficients(t)
    try:
        return gfevd(vma_expand(B, H), path.sigma[t])
    except DomainError as e:
        raise e.prefix(f"date index {t}")


def gfevd_path(path, H=None):
    H = H or path.spec.horizon
    tables = runtime.map(
        functools.partial(_gfevd_at, path=path, H=H),
        range(len(path)),
        kind="thread",
    )
    return GfevdPath(
        path.dates,
        path.names,
        np.stack([g.theta for g in tables]),
        np.stack([g.d for g in tables]),
    )


def write_gfevd(gfevds, path):
    return write_csv(gfevds.to_frame(), path)


def read_gfevd(path, stage="connect"):
    """Inverse of :func:`write_gfevd`; raw shares are not stored, so
    ``theta`` is returned as the normalized table."""
    frame = read_csv(path, stage=stage)
    if list(frame.columns) != ["date", "from", "to", "share"]:
        raise DataError(f"{path}: header must be date,from,to,share")
    names = tuple(pd.unique(frame["to"]))
    dates = pd.DatetimeIndex(
        pd.to_datetime(pd.unique(frame["date"]), format="%Y-%m-%d")
    )
    T, N = len(dates), len(names)
    if len(frame) != T * N * N:
        raise DataError(f"{path}: expected {T * N * N} rows")
    d = frame["share"].to_numpy(np.float64).reshape(T, N, N)
    return GfevdPath(dates, names, d, d)
