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
import scipy.linalg as sla

from momentnet.errors import ConditioningError, DimensionError

__all__ = [
    "check_square",
    "cholesky",
    "companion",
    "condition_number",
    "is_psd",
    "solve_spd",
    "spectral_radius",
    "symmetrize",
]


def check_square(a, name="array"):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionError(
            f"{a.ndim}-dimensional {name} given. "
            "Array must be two-dimensional"
        )
    elif a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {a.shape}")
    return a


def symmetrize(a):
    return 0.5 * (a + a.T)


def condition_number(a):
    """2-norm condition number of a symmetric matrix; ``inf`` when it is
    not positive definite."""
    eig = np.linalg.eigvalsh(symmetrize(check_square(a)))
    if eig[0] <= 0.0 or not np.all(np.isfinite(eig)):
        return np.inf
    return eig[-1] / eig[0]


def is_psd(a, tol=1e-10):
    a = check_square(a)
    if not np.allclose(a, a.T, atol=tol * max(1.0, np.abs(a).max())):
        return False
    eig = np.linalg.eigvalsh(symmetrize(a))
    return bool(eig[0] >= -tol * max(1.0, abs(eig[-1])))


def cholesky(a):
    a = check_square(a)
    return np.linalg.cholesky(symmetrize(a))


def solve_spd(a, b, max_condition=1e12, index=None, return_condition=False):
    """Solve ``a x = b`` for symmetric positive definite ``a``.

    Raises ConditioningError when the condition number of ``a`` exceeds
    ``max_condition`` or the Cholesky factorization fails.
    """
    a = symmetrize(check_square(a))
    cond = condition_number(a)
    if not cond <= max_condition:
        raise ConditioningError(index, cond)
    try:
        factor = sla.cho_factor(a, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        raise ConditioningError(index, np.inf)
    x = sla.cho_solve(factor, b, check_finite=False)
    if return_condition:
        return x, cond
    return x


def companion(coefs):
    """Companion matrix of the lag matrices ``[B_1, ..., B_p]``."""
    p = len(coefs)
    n = coefs[0].shape[0]
    top = np.hstack(coefs)
    if p == 1:
        return top
    bottom = np.hstack([np.eye(n * (p - 1)), np.zeros((n * (p - 1), n))])
    return np.vstack([top, bottom])


def spectral_radius(coefs):
    return float(np.max(np.abs(np.linalg.eigvals(companion(coefs)))))
