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

"""Dynamic adaptive mixture model with score-driven recursions.

The unconstrained state of a J-component Gaussian mixture is laid out as

    u = [w~_1 .. w~_{J-1}, mu_1, ln sigma_1, ..., mu_J, ln sigma_J]

so ``D = 3J - 1``. Weights come from a stick-breaking map of ``w~``;
component scales are kept positive through the log map. Every
coefficient matrix is diagonal and stored as a length ``D`` vector.
"""

import functools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.optimize import minimize
from scipy.special import expit, logit, logsumexp

from momentnet.errors import (
    DomainError,
    FilterDivergenceError,
    FitError,
    MomentNetError,
    SampleSizeError,
)
from momentnet.random import generator
from momentnet.runtime import runtime
from momentnet.utils import all_finite, fallback, format_dates

logger = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)
# expit saturates to exactly 0 or 1 in double precision beyond this
WEIGHT_CLIP = 30.0
B_SCALE = 0.999
MIN_FIT_OBS = 250
FD_STEP = 1e-5
DELTAS = (0, 0.5, 1)

_KAPPA_BOUND = 50.0
_LOG_A_BOUNDS = (-12.0, 3.0)
_ATANH_B_BOUND = 5.0


def state_size(J):
    return 3 * J - 1


def modified_logistic(L, U, x):
    if not L < U:
        raise ValueError(f"lower bound {L} must be below upper bound {U}")
    return L + (U - L) * expit(x)


def _stick_breaking(w_tilde):
    w_tilde = np.asarray(w_tilde, dtype=np.float64)
    w_tilde = np.clip(w_tilde, -WEIGHT_CLIP, WEIGHT_CLIP)
    J = w_tilde.shape[-1] + 1
    shape = w_tilde.shape[:-1]
    s = expit(w_tilde)
    weights = np.empty(shape + (J,))
    sticks = np.empty(shape + (J,))
    b = np.ones(shape)
    for j in range(J - 1):
        sticks[..., j] = b
        weights[..., j] = b * s[..., j]
        b = b * expit(-w_tilde[..., j])
    sticks[..., J - 1] = b
    weights[..., J - 1] = b
    return weights, sticks, s


def simplex_map(w_tilde):
    """Stick-breaking weights: ``w_j = b_j * expit(w~_j)`` with
    ``b_1 = 1``, ``b_{j+1} = b_j - w_j`` and ``w_J = b_J``."""
    return _stick_breaking(w_tilde)[0]


def simplex_jacobian(w_tilde):
    """Derivative of :func:`simplex_map`, shape ``(..., J, J-1)``."""
    _, sticks, s = _stick_breaking(w_tilde)
    J = sticks.shape[-1]
    jac = np.zeros(sticks.shape + (J - 1,))
    for j in range(J - 1):
        sj = s[..., j]
        jac[..., j, j] = sticks[..., j] * sj * (1.0 - sj)
        if j > 0:
            above = jac[..., :j, :j].sum(axis=-2)
            jac[..., j, :j] = -sj[..., None] * above
    jac[..., J - 1, :] = -jac[..., : J - 1, :].sum(axis=-2)
    return jac


def _split(u, J):
    theta = u[..., J - 1 :].reshape(u.shape[:-1] + (J, 2))
    return u[..., : J - 1], theta[..., 0], theta[..., 1]


@dataclass(frozen=True)
class MixtureState:
    """Mixture parameters at one date, or a path when arrays carry a
    leading time axis."""

    unconstrained: np.ndarray
    weights: np.ndarray
    means: np.ndarray
    scales: np.ndarray
    order: tuple = field(default=None)

    @classmethod
    def from_unconstrained(cls, u, J):
        u = np.asarray(u, dtype=np.float64)
        if u.shape[-1] != state_size(J):
            raise ValueError(
                f"state of length {u.shape[-1]} does not match J={J}"
            )
        w_tilde, mu, log_sigma = _split(u, J)
        return cls(u, simplex_map(w_tilde), mu.copy(), np.exp(log_sigma))

    @property
    def J(self):
        return self.weights.shape[-1]

    def __len__(self):
        if self.weights.ndim < 2:
            raise TypeError("a single-date state has no length")
        return self.weights.shape[0]

    def at(self, t):
        return MixtureState(
            self.unconstrained[t],
            self.weights[t],
            self.means[t],
            self.scales[t],
            self.order,
        )

    def reordered(self, order):
        """Components permuted for reporting; the unconstrained state
        keeps the fitted order."""
        order = np.asarray(order)
        return MixtureState(
            self.unconstrained,
            self.weights[..., order],
            self.means[..., order],
            self.scales[..., order],
            tuple(int(i) for i in order),
        )


@dataclass(frozen=True)
class SdCoefficients:
    J: int
    kappa: np.ndarray
    A: np.ndarray
    B: np.ndarray
    delta: float = 0.5

    def __post_init__(self):
        D = state_size(self.J)
        for name in ("kappa", "A", "B"):
            value = np.asarray(getattr(self, name), dtype=np.float64)
            if value.shape != (D,):
                raise ValueError(
                    f"{name} must have length {D} for J={self.J}, "
                    f"got shape {value.shape}"
                )
            if not np.all(np.isfinite(value)):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, value)
        # A = 0 freezes the recursion at its fixed point
        if np.any(self.A < 0.0):
            raise ValueError("score loadings A must be nonnegative")
        if np.any(np.abs(self.B) >= 1.0):
            raise ValueError("autoregressive coefficients need |B| < 1")
        if self.delta not in DELTAS:
            raise ValueError(f"delta must be one of {DELTAS}")

    @property
    def D(self):
        return state_size(self.J)

    def block(self, name, j=None):
        """``kappa``/``A``/``B`` restricted to the weight block
        (``j is None``) or to component ``j``."""
        value = getattr(self, name)
        if j is None:
            return value[: self.J - 1]
        start = self.J - 1 + 2 * j
        return value[start : start + 2]

    def initial_state(self):
        return MixtureState.from_unconstrained(
            self.kappa / (1.0 - self.B), self.J
        )

    def to_dict(self):
        return {
            "J": self.J,
            "delta": self.delta,
            "kappa": self.kappa.tolist(),
            "A": self.A.tolist(),
            "B": self.B.tolist(),
        }


@dataclass(frozen=True)
class ScoreStep:
    loglik: float
    score: np.ndarray
    scaled_score: np.ndarray
    weight_jacobian: np.ndarray
    component_jacobian: np.ndarray
    fisher: np.ndarray


def _score(y, u, J, delta):
    """Log density, score and scaled score in unconstrained coordinates.

    Works on any leading batch shape of ``u``.
    """
    w_tilde, mu, log_sigma = _split(u, J)
    weights = simplex_map(w_tilde)
    sigma = np.exp(log_sigma)
    z = (y - mu) / sigma
    log_f = -0.5 * LOG_2PI - log_sigma - 0.5 * z * z
    with np.errstate(divide="ignore"):
        log_joint = np.log(weights) + log_f
    log_p = logsumexp(log_joint, axis=-1)
    post = np.exp(log_joint - log_p[..., None])
    density_ratio = np.exp(log_f - log_p[..., None])
    jac = simplex_jacobian(w_tilde)
    grad_w = np.einsum("...jk,...j->...k", jac, density_ratio)
    grad_mu = post * z / sigma
    grad_ls = post * (z * z - 1.0)
    # Fisher information in (mu, ln sigma) is diag(1/sigma^2, 2)
    scaled_mu = grad_mu * sigma ** (2.0 * delta)
    scaled_ls = grad_ls * 2.0 ** (-delta)
    batch = u.shape[:-1]
    raw = np.concatenate(
        [grad_w, np.stack([grad_mu, grad_ls], -1).reshape(batch + (2 * J,))],
        axis=-1,
    )
    scaled = np.concatenate(
        [
            grad_w,
            np.stack([scaled_mu, scaled_ls], -1).reshape(batch + (2 * J,)),
        ],
        axis=-1,
    )
    return log_p, raw, scaled, jac, sigma


def score_step(y, state, coeffs):
    J = coeffs.J
    u = np.asarray(state.unconstrained, dtype=np.float64)
    log_p, raw, scaled, jac, sigma = _score(y, u, J, coeffs.delta)
    fisher = np.zeros(sigma.shape + (2, 2))
    fisher[..., 0, 0] = 1.0 / sigma**2
    fisher[..., 1, 1] = 2.0
    comp_jac = np.zeros(sigma.shape + (2, 2))
    comp_jac[..., 0, 0] = 1.0
    comp_jac[..., 1, 1] = sigma
    return ScoreStep(float(log_p), raw, scaled, jac, comp_jac, fisher)


def damm_step(y, state, coeffs, index=0):
    """One score-driven update ``u' = kappa + A * s + B * u``."""
    with np.errstate(all="ignore"):
        step = score_step(y, state, coeffs)
        if not (np.isfinite(step.loglik) and all_finite(step.scaled_score)):
            raise FilterDivergenceError(index)
        u = coeffs.kappa + coeffs.A * step.scaled_score
        u = u + coeffs.B * state.unconstrained
    if not all_finite(u):
        raise FilterDivergenceError(index, "non-finite state")
    return MixtureState.from_unconstrained(u, coeffs.J)


def _filter_batch(y, kappa, A, B, J, delta, keep_path=False, strict=True):
    """Run the recursion for ``K`` coefficient vectors at once.

    Returns the total log-likelihood per vector and, on request, the
    ``(T, K, D)`` path of predictive states. With ``strict=False``
    diverging vectors score ``-inf`` instead of raising.
    """
    K, D = kappa.shape
    u = kappa / (1.0 - B)
    loglik = np.zeros(K)
    alive = np.ones(K, dtype=bool)
    path = np.empty((len(y), K, D)) if keep_path else None
    with np.errstate(all="ignore"):
        for t, y_t in enumerate(y):
            if keep_path:
                path[t] = u
            log_p, _, scaled, _, _ = _score(y_t, u, J, delta)
            ok = np.isfinite(log_p) & np.all(np.isfinite(scaled), axis=-1)
            if not np.all(ok):
                if strict:
                    raise FilterDivergenceError(t)
                alive &= ok
                log_p = np.where(ok, log_p, 0.0)
                scaled = np.where(ok[:, None], scaled, 0.0)
            loglik += log_p
            u = kappa + A * scaled + B * u
    loglik[~alive] = -np.inf
    return loglik, path


def filter_path(y, coeffs):
    """Predictive state path and log-likelihood at fixed coefficients.

    Entry ``t`` of the path is the state used to evaluate ``y[t]``.
    """
    y = np.asarray(y, dtype=np.float64)
    loglik, path = _filter_batch(
        y,
        coeffs.kappa[None],
        coeffs.A[None],
        coeffs.B[None],
        coeffs.J,
        coeffs.delta,
        keep_path=True,
    )
    state = MixtureState.from_unconstrained(path[:, 0, :], coeffs.J)
    return state, float(loglik[0])


def simulate(coeffs, T, rng):
    """Draw ``T`` observations from the model; returns ``(y, states)``."""
    J = coeffs.J
    state = coeffs.initial_state()
    y = np.empty(T)
    path = np.empty((T, coeffs.D))
    for t in range(T):
        path[t] = state.unconstrained
        j = rng.choice(J, p=state.weights / state.weights.sum())
        y[t] = state.means[j] + state.scales[j] * rng.standard_normal()
        state = damm_step(y[t], state, coeffs, index=t)
    return y, MixtureState.from_unconstrained(path, J)


def mixture_moments(weights, means, scales, printed=False):
    """Variance, skewness and excess kurtosis of a Gaussian mixture.

    With ``printed=True`` the raw-moment expressions used in early
    write-ups of the model are evaluated instead, for comparison only.
    """
    w = np.asarray(weights, dtype=np.float64)
    mu = np.asarray(means, dtype=np.float64)
    s2 = np.asarray(scales, dtype=np.float64) ** 2
    if printed:
        vol = np.sum(w * (s2 + mu**2), axis=-1)
        _check_vol(vol)
        skew = np.sum(w * mu * (3.0 * s2 + mu**2), axis=-1) / vol**2
        kurt = (
            np.sum(w * (mu**4 + 6.0 * mu * s2 + 3.0 * s2**2), axis=-1)
            / vol**4
            - 3.0
        )
        return vol, skew, kurt
    m = np.sum(w * mu, axis=-1, keepdims=True)
    d = mu - m
    vol = np.sum(w * (s2 + d**2), axis=-1)
    _check_vol(vol)
    m3 = np.sum(w * (d**3 + 3.0 * d * s2), axis=-1)
    m4 = np.sum(w * (d**4 + 6.0 * d**2 * s2 + 3.0 * s2**2), axis=-1)
    return vol, m3 / vol**1.5, m4 / vol**2 - 3.0


def _check_vol(vol):
    if np.any(~(vol > 0.0)):
        raise DomainError("mixture variance is zero or undefined")


# Fitting


def pack(kappa, A, B):
    """Free optimizer vector for coefficients with ``A > 0``."""
    return np.concatenate([kappa, np.log(A), np.arctanh(B / B_SCALE)])


def unpack(phi, D):
    phi = np.asarray(phi, dtype=np.float64)
    kappa = phi[..., :D]
    A = np.exp(phi[..., D : 2 * D])
    B = B_SCALE * np.tanh(phi[..., 2 * D :])
    return kappa, A, B


def _bounds(D):
    return (
        [(-_KAPPA_BOUND, _KAPPA_BOUND)] * D
        + [_LOG_A_BOUNDS] * D
        + [(-_ATANH_B_BOUND, _ATANH_B_BOUND)] * D
    )


def _equal_weights(J):
    return np.array([logit(1.0 / (J - j)) for j in range(J - 1)])


def starting_points(y, J, n_starts, rng):
    mean, sd = float(np.mean(y)), float(np.std(y))
    if not sd > 0.0:
        raise DomainError("degenerate variance: series is constant")
    spread = np.linspace(-0.5, 0.5, J) if J > 1 else np.zeros(1)
    mu0 = mean + sd * spread
    log_sigma0 = np.full(J, math.log(sd) - (0.1 if J > 1 else 0.0))
    u0 = np.concatenate(
        [_equal_weights(J), np.stack([mu0, log_sigma0], -1).ravel()]
    )
    D = state_size(J)
    B0 = np.full(D, 0.9)
    A0 = np.full(D, 0.05)
    starts = [pack((1.0 - B0) * u0, A0, B0)]
    for _ in range(n_starts - 1):
        u = u0 + rng.normal(0.0, 0.25, D) * np.r_[
            np.ones(J - 1), np.tile([sd, 0.5], J)
        ]
        B = rng.uniform(0.5, 0.98, D)
        A = np.exp(rng.uniform(math.log(0.01), math.log(0.2), D))
        starts.append(pack((1.0 - B) * u, A, B))
    return [np.clip(s, *np.array(_bounds(D)).T) for s in starts]


class _Objective(object):
    """Mean negative log-likelihood with central-difference gradient,
    evaluated in one batched pass over the data."""

    def __init__(self, y, J, delta):
        self.y = y
        self.J = J
        self.D = state_size(J)
        self.delta = delta
        self.evaluations = 0
        self.last_x = None
        self.last = None

    def __call__(self, phi):
        if self.last_x is not None and np.array_equal(phi, self.last_x):
            return self.last
        n = len(phi)
        batch = np.repeat(phi[None], 2 * n + 1, axis=0)
        idx = np.arange(n)
        batch[1 + 2 * idx, idx] += FD_STEP
        batch[2 + 2 * idx, idx] -= FD_STEP
        kappa, A, B = unpack(batch, self.D)
        loglik, _ = _filter_batch(
            self.y, kappa, A, B, self.J, self.delta, strict=False
        )
        self.evaluations += 1
        T = len(self.y)
        if not np.isfinite(loglik[0]):
            value, grad = 1e10, np.zeros(n)
        else:
            value = -loglik[0] / T
            with np.errstate(invalid="ignore"):
                grad = -(loglik[1::2] - loglik[2::2]) / (2.0 * FD_STEP * T)
            grad = np.where(np.isfinite(grad), grad, 0.0)
        self.last_x = np.array(phi, copy=True)
        self.last = (value, grad)
        return self.last


class _ConvergenceMonitor(object):
    """Stops the optimizer once the objective changed by less than
    ``tol`` (relative) over ``patience`` iterations."""

    def __init__(self, objective, tol, patience):
        self.objective = objective
        self.tol = tol
        self.patience = patience
        self.history = []
        self.stopped = False

    def __call__(self, xk):
        value = self.objective(np.asarray(xk))[0]
        self.history.append(value)
        if len(self.history) > self.patience:
            old = self.history[-self.patience - 1]
            if abs(old - value) <= self.tol * max(1.0, abs(old)):
                self.stopped = True
                raise StopIteration


@dataclass(frozen=True)
class FitResult:
    name: str
    coefficients: SdCoefficients
    state: MixtureState
    loglik: float
    converged: bool
    iterations: int
    seed: int
    starts: list

    def to_dict(self):
        return {
            "series": self.name,
            "J": self.coefficients.J,
            "coefficients": self.coefficients.to_dict(),
            "component_order": list(self.state.order or ()),
            "loglik": self.loglik,
            "converged": self.converged,
            "iterations": self.iterations,
            "seed": self.seed,
            "starts": self.starts,
        }


def damm_fit(
    y,
    J=2,
    n_starts=5,
    maxiter=500,
    tol=1e-8,
    patience=10,
    delta=0.5,
    seed=0,
    require_convergence=True,
    name="series",
):
    """Maximum likelihood fit of the score-driven mixture to ``y``.

    Each start is refined with L-BFGS-B on the reparameterized
    coefficients ``(kappa, ln A, atanh(B / 0.999))``; the best converged
    start wins. Components of the returned state are ordered by their
    time-averaged mean.
    """
    y = np.asarray(y, dtype=np.float64)
    if len(y) < MIN_FIT_OBS:
        raise SampleSizeError(
            f"series '{name}' has {len(y)} observations, "
            f"at least {MIN_FIT_OBS} are required"
        )
    if J < 1:
        raise ValueError("J must be at least 1")
    if not all_finite(y):
        raise DomainError(f"series '{name}' has non-finite values")
    D = state_size(J)
    rng = generator(seed, "damm", name)
    objective = _Objective(y, J, delta)
    bounds = _bounds(D)
    best = None
    diagnostics = []
    for k, phi0 in enumerate(starting_points(y, J, n_starts, rng)):
        start_value = objective(phi0)[0]
        monitor = _ConvergenceMonitor(objective, tol, patience)
        result = minimize(
            objective,
            phi0,
            jac=True,
            method="L-BFGS-B",
            bounds=bounds,
            callback=monitor,
            options={"maxiter": maxiter},
        )
        phi, value = result.x, float(result.fun)
        if not np.isfinite(value) or value > start_value:
            phi, value = phi0, start_value
        converged = bool(result.success or monitor.stopped)
        diagnostics.append(
            {
                "start": k,
                "start_loglik": -start_value * len(y),
                "loglik": -value * len(y),
                "converged": converged,
                "iterations": int(result.nit),
                "message": str(result.message),
            }
        )
        logger.debug(
            "start series=%s k=%d loglik=%.6f converged=%s",
            name,
            k,
            -value * len(y),
            converged,
        )
        if value >= 1e10:
            continue
        candidate = (not converged, value, k, phi, int(result.nit), converged)
        if best is None or candidate[:3] < best[:3]:
            best = candidate
    if best is None or (not best[5] and require_convergence):
        raise FitError(
            f"series '{name}': no start converged within {maxiter} "
            "iterations",
            diagnostics,
        )
    if not best[5]:
        fallback(f"series '{name}': using best non-converged start", logger)
    _, _, start, phi, nit, converged = best
    kappa, A, B = unpack(phi, D)
    coeffs = SdCoefficients(J, kappa, A, B, delta)
    state, loglik = filter_path(y, coeffs)
    order = np.argsort(state.means.mean(axis=0), kind="stable")
    logger.info(
        "fit series=%s J=%d loglik=%.6f converged=%s start=%d",
        name,
        J,
        loglik,
        converged,
        start,
    )
    return FitResult(
        name=name,
        coefficients=coeffs,
        state=state.reordered(order),
        loglik=loglik,
        converged=converged,
        iterations=nit,
        seed=seed,
        starts=diagnostics,
    )


# Moment panels


@dataclass(frozen=True)
class MomentPanel:
    dates: pd.DatetimeIndex
    names: tuple
    vol: np.ndarray
    skew: np.ndarray
    kurt: np.ndarray
    vol_scale: str = "log"

    def layer(self, moment):
        """``(T, N)`` matrix of one moment, ``moment`` in
        {"volatility", "skewness", "kurtosis"}."""
        key = {"volatility": "vol", "skewness": "skew", "kurtosis": "kurt"}
        try:
            return getattr(self, key[moment])
        except KeyError:
            raise KeyError(f"unknown moment '{moment}'") from None

    def to_frame(self):
        T, N = self.vol.shape
        return pd.DataFrame(
            {
                "date": np.repeat(format_dates(self.dates), N),
                "series": np.tile(np.asarray(self.names, dtype=object), T),
                "vol": self.vol.ravel(),
                "skew": self.skew.ravel(),
                "kurt": self.kurt.ravel(),
            }
        )

    @classmethod
    def from_frame(cls, frame, vol_scale="log"):
        frame = frame.copy()
        frame["date"] = pd.to_datetime(frame["date"], format="%Y-%m-%d")
        names = tuple(pd.unique(frame["series"]))
        wide = frame.pivot(index="date", columns="series")
        dates = pd.DatetimeIndex(wide.index)
        arrays = [
            wide[column].reindex(columns=list(names)).to_numpy(np.float64)
            for column in ("vol", "skew", "kurt")
        ]
        return cls(dates, names, *arrays, vol_scale=vol_scale)


def _fit_series(item, options):
    name, y = item
    try:
        return damm_fit(y, name=name, **options)
    except MomentNetError as e:
        if f"series '{name}'" not in str(e):
            e.prefix(f"series '{name}'")
        raise


def extract_moment_panel(
    returns,
    J=2,
    config=None,
    seed=0,
    vol_scale="log",
    printed=False,
):
    """Fit every series and evaluate its conditional moments per date.

    ``config`` holds ``damm_fit`` keyword options. Fits run in parallel
    through the process-wide runtime. Returns ``(MomentPanel, fits)``.
    """
    if vol_scale not in ("log", "variance"):
        raise ValueError("vol_scale must be 'log' or 'variance'")
    options = dict(config or {})
    for key in ("components", "vol_scale", "printed_moments"):
        options.pop(key, None)
    options.update(J=J, seed=seed)
    items = [
        (name, returns.values[:, i]) for i, name in enumerate(returns.names)
    ]
    fits = runtime.map(functools.partial(_fit_series, options=options), items)
    T, N = returns.values.shape
    vol, skew, kurt = np.empty((T, N)), np.empty((T, N)), np.empty((T, N))
    for i, fit in enumerate(fits):
        try:
            v, s, k = mixture_moments(
                fit.state.weights, fit.state.means, fit.state.scales, printed
            )
        except DomainError as e:
            raise e.prefix(f"series '{fit.name}'")
        vol[:, i] = 0.5 * np.log(v) if vol_scale == "log" else v
        skew[:, i] = s
        kurt[:, i] = k
    panel = MomentPanel(
        returns.dates, tuple(returns.names), vol, skew, kurt, vol_scale
    )
    return panel, fits
