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


import numpy as np
import pandas as pd


def mk_spd(rng, n, scale=1.0):
    """Random symmetric positive definite matrix."""
    a = rng.standard_normal((n, n))
    return scale * (a @ a.T / n + np.eye(n))


def mk_stable_var(rng, N, p, radius=0.8):
    """Lag matrices ``(p, N, N)`` whose companion spectral radius is at
    most ``radius``."""
    from momentnet.linalg import spectral_radius

    B = rng.standard_normal((p, N, N)) / (N * p)
    rho = spectral_radius(list(B))
    if rho > radius:
        # scaling B_k by c**k scales every companion eigenvalue by c
        c = 0.99 * radius / rho
        B = B * (c ** np.arange(1, p + 1))[:, None, None]
    return B


def simulate_var(rng, B, sigma, T, c=None, burn=100):
    p, N, _ = B.shape
    c = np.zeros(N) if c is None else c
    chol = np.linalg.cholesky(sigma)
    y = np.zeros((T + burn, N))
    for t in range(p, T + burn):
        y[t] = c + sum(B[k] @ y[t - k - 1] for k in range(p))
        y[t] += chol @ rng.standard_normal(N)
    return y[burn:]


def mk_mixture(rng, J):
    """Weights, means and scales of a random ``J``-component mixture."""
    w = rng.dirichlet(np.ones(J))
    mu = rng.normal(0.0, 1.0, J)
    sigma = rng.uniform(0.3, 2.0, J)
    return w, mu, sigma


def mk_decomposition(rng, N, T=None):
    """Row-normalized variance decomposition(s) with a dominant
    diagonal."""
    shape = (N, N) if T is None else (T, N, N)
    d = rng.uniform(0.0, 1.0, shape) + 2.0 * np.eye(N)
    return d / d.sum(axis=-1, keepdims=True)


def mk_dates(T, start="2015-01-02"):
    return pd.bdate_range(start, periods=T)
