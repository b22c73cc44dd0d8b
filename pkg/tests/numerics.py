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
from test_tools.asserts import assert_allclose
from test_tools.generators import mk_spd

from momentnet import linalg
from momentnet.errors import (
    ConditioningError,
    DataError,
    DimensionError,
    MissingInputError,
)
from momentnet.io import read_csv, read_json, sha256_file, write_json
from momentnet.random import generator, generators
from momentnet.runtime import Runtime
from momentnet.utils import lagged_design, ols


def square(x):
    return x * x


def test_solve_spd():
    rng = np.random.default_rng(0)
    a = mk_spd(rng, 6)
    b = rng.standard_normal((6, 2))
    x, cond = linalg.solve_spd(a, b, return_condition=True)
    assert_allclose(a @ x, b, rtol=1e-10, atol=1e-12)
    assert_allclose(cond, np.linalg.cond(a), rtol=1e-8)
    bad = np.diag([1.0, 1e-14])
    with pytest.raises(ConditioningError) as info:
        linalg.solve_spd(bad, np.ones(2), index=7)
    assert info.value.index == 7
    with pytest.raises(DimensionError):
        linalg.solve_spd(np.ones((2, 3)), np.ones(2))
    with pytest.raises(DimensionError):
        linalg.check_square(np.ones(3))


def test_companion():
    B1 = np.array([[0.5, 0.1], [0.0, 0.3]])
    B2 = np.array([[0.1, 0.0], [0.2, 0.1]])
    F = linalg.companion([B1, B2])
    assert F.shape == (4, 4)
    assert np.array_equal(F[:2, :2], B1) and np.array_equal(F[:2, 2:], B2)
    assert np.array_equal(F[2:, :2], np.eye(2))
    assert abs(linalg.spectral_radius([B1]) - 0.5) < 1e-14
    assert linalg.is_psd(mk_spd(np.random.default_rng(1), 4))
    assert not linalg.is_psd(np.diag([1.0, -1.0]))
    a = mk_spd(np.random.default_rng(2), 3)
    L = linalg.cholesky(a)
    assert np.array_equal(L, np.tril(L))
    assert_allclose(L @ L.T, a, rtol=1e-12, atol=1e-12)
    assert linalg.condition_number(np.diag([1.0, 0.0])) == np.inf


def test_streams():
    a = generator(5, "damm", "series_1").standard_normal(4)
    b = generator(5, "damm", "series_1").standard_normal(4)
    c = generator(5, "damm", "series_2").standard_normal(4)
    d = generator(6, "damm", "series_1").standard_normal(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c) and not np.array_equal(a, d)
    first = [g.uniform() for g in generators(5, 3, "bvar")]
    second = [g.uniform() for g in generators(5, 3, "bvar")]
    assert first == second and len(set(first)) == 3
    with pytest.raises(ValueError):
        generator(5, -1)


def test_runtime_map():
    runtime = Runtime()
    assert runtime.map(square, range(5)) == [0, 1, 4, 9, 16]
    runtime.configure(threads=2)
    assert runtime.map(square, range(5), kind="thread") == [0, 1, 4, 9, 16]
    with pytest.raises(ValueError):
        runtime.map(square, range(5), kind="gpu")
    with pytest.raises(ValueError):
        runtime.configure(threads=0)


def test_lagged_design():
    y = np.arange(10.0).reshape(5, 2)
    target, X = lagged_design(y, 2)
    assert np.array_equal(target, y[2:])
    assert np.array_equal(X[0], [1.0, 2.0, 3.0, 0.0, 1.0])
    _, X = lagged_design(y, 1, intercept=False)
    assert np.array_equal(X, y[:-1])
    rng = np.random.default_rng(2)
    Z = np.column_stack([np.ones(30), rng.standard_normal(30)])
    coef, resid, rank = ols(Z @ [1.0, 2.0], Z)
    assert rank == 2
    assert_allclose(coef, [1.0, 2.0], rtol=1e-12)
    assert_allclose(resid, np.zeros(30), atol=1e-12)


def test_io():
    with tempfile.TemporaryDirectory() as root:
        with pytest.raises(MissingInputError) as info:
            read_csv(os.path.join(root, "nope.csv"), stage="moments")
        assert info.value.stage == "moments"
        assert "run the 'moments' stage first" in str(info.value)
        empty = os.path.join(root, "empty.csv")
        open(empty, "w").close()
        with pytest.raises(DataError):
            read_csv(empty)
        path = write_json(
            {"x": np.arange(3), "v": np.float64(np.nan), "t": True},
            os.path.join(root, "sub", "doc.json"),
        )
        assert read_json(path) == {"t": True, "v": None, "x": [0, 1, 2]}
        assert len(sha256_file(path)) == 64
        frame = pd.DataFrame({"a": [0.1, 1.0 / 3.0]})
        frame.to_csv(os.path.join(root, "f.csv"), index=False)
        assert read_csv(os.path.join(root, "f.csv")).shape == (2, 1)


if __name__ == "__main__":
    test_solve_spd()
    test_companion()
    test_streams()
    test_runtime_map()
    test_lagged_design()
    test_io()
