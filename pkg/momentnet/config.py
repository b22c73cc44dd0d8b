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

import copy
import hashlib
import json
import os
from enum import IntEnum, unique

VERSION = "0.3.0"


# Process exit status of the command line tool
@unique
class ExitCode(IntEnum):
    SUCCESS = 0
    CONFIG_ERROR = 2
    DATA_ERROR = 3
    NUMERICAL_ERROR = 4


# The moment layers of the network, in the order they are stacked
@unique
class Moment(IntEnum):
    RETURN = 1
    VOLATILITY = 2
    SKEWNESS = 3
    KURTOSIS = 4

    @property
    def label(self):
        return self.name.lower()

    @classmethod
    def from_label(cls, label):
        try:
            return cls[label.upper()]
        except KeyError:
            raise KeyError(f"unknown moment layer '{label}'") from None


# Fed policy regimes of the local projections
@unique
class Regime(IntEnum):
    HIKE = 1
    UNCHANGED = 2
    CUT = 3

    @property
    def label(self):
        return {"HIKE": "hike", "UNCHANGED": "unch", "CUT": "cut"}[self.name]


DECISIONS = ("hike", "cut", "unchanged")
CATEGORIES = ("bond", "equity")


DEFAULTS = {
    "seed": 0,
    "threads": 1,
    "data": {
        "source": "csv",
        "prices": "prices.csv",
        "events": "fomc_events.csv",
        "surprises": "surprises.csv",
        "macro": "macro.csv",
        "categories": {},
        "synthetic": {
            "n_series": 9,
            "n_days": 2000,
            "n_months": 400,
            "blocks": [5, 4],
        },
    },
    "timeseries": {
        # None selects floor(12 * (T / 100) ** 0.25)
        "adf_max_lag": None,
    },
    "damm": {
        "components": 2,
        "delta": 0.5,
        "n_starts": 5,
        "maxiter": 500,
        "tol": 1e-8,
        "patience": 10,
        "require_convergence": True,
        "vol_scale": "log",
        "printed_moments": False,
    },
    "tvpvar": {
        "forgetting": 0.99,
        "ewma": 0.99,
        "shrinkage": 0.01,
        "horizon": 12,
        "p_max": 5,
        "lag": None,
        "max_condition": 1e12,
    },
    "network": {
        "layers": ["return", "volatility", "skewness", "kurtosis"],
        "static_weights": "average",
        "index_form": False,
    },
    "shocks": {
        "lags": 12,
        "draws": 1000,
        "angles": 100,
        "prior_scale": 0.1,
        "prior_precision": 1e-4,
        "min_accepted": 100,
    },
    "lp": {
        "h_max": 18,
        "bands": [0.68, 0.90],
        "aggregation": "last",
    },
    "output": {
        "dir": "out",
    },
}


def _between(lo, hi, lo_open=False, hi_open=False):
    def check(x):
        if not isinstance(x, (int, float)) or isinstance(x, bool):
            return False
        ok_lo = x > lo if lo_open else x >= lo
        ok_hi = x < hi if hi_open else x <= hi
        return ok_lo and ok_hi

    return check


def _positive_int(x):
    return isinstance(x, int) and not isinstance(x, bool) and x >= 1


def _optional(check):
    return lambda x: x is None or check(x)


_RULES = [
    ("seed", lambda x: isinstance(x, int) and x >= 0, "nonnegative integer"),
    ("threads", _positive_int, "integer >= 1"),
    (
        "data.source",
        lambda x: x in ("csv", "synthetic"),
        "one of 'csv', 'synthetic'",
    ),
    ("timeseries.adf_max_lag", _optional(_positive_int), "integer >= 1"),
    ("damm.components", lambda x: x in (1, 2, 3, 4), "integer in 1..4"),
    ("damm.delta", lambda x: x in (0, 0.5, 1), "one of 0, 0.5, 1"),
    ("damm.n_starts", _positive_int, "integer >= 1"),
    ("damm.maxiter", _positive_int, "integer >= 1"),
    ("damm.tol", _between(0.0, 1.0, lo_open=True), "in (0, 1]"),
    ("damm.patience", _positive_int, "integer >= 1"),
    (
        "damm.vol_scale",
        lambda x: x in ("log", "variance"),
        "one of 'log', 'variance'",
    ),
    ("tvpvar.forgetting", _between(0.0, 1.0, lo_open=True), "in (0, 1]"),
    (
        "tvpvar.ewma",
        _between(0.0, 1.0, lo_open=True, hi_open=True),
        "in (0, 1)",
    ),
    ("tvpvar.shrinkage", _between(0.0, float("inf"), lo_open=True), "> 0"),
    ("tvpvar.horizon", _positive_int, "integer >= 1"),
    ("tvpvar.p_max", _positive_int, "integer >= 1"),
    ("tvpvar.lag", _optional(_positive_int), "integer >= 1"),
    (
        "network.static_weights",
        lambda x: x in ("average", "per-date"),
        "one of 'average', 'per-date'",
    ),
    ("shocks.lags", _positive_int, "integer >= 1"),
    ("shocks.draws", _positive_int, "integer >= 1"),
    ("shocks.angles", _positive_int, "integer >= 1"),
    ("shocks.prior_scale", _between(0.0, float("inf"), lo_open=True), "> 0"),
    ("lp.h_max", lambda x: isinstance(x, int) and x >= 0, "integer >= 0"),
    (
        "lp.bands",
        lambda xs: isinstance(xs, list)
        and len(xs) > 0
        and all(_between(0.0, 1.0, True, True)(x) for x in xs),
        "list of levels in (0, 1)",
    ),
    (
        "lp.aggregation",
        lambda x: x in ("last", "mean"),
        "one of 'last', 'mean'",
    ),
]


def load_json_config(filename):
    from .errors import ConfigError

    try:
        with open(filename, "r") as f:
            return json.load(f)
    except IOError as e:
        raise ConfigError(f"cannot read config: {e}", path=filename)
    except json.JSONDecodeError as e:
        raise ConfigError(
            f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}",
            path=filename,
        )


def parse_override(token):
    """Split a ``section.key=value`` token; the value is parsed as JSON
    when possible and kept as a string otherwise."""
    from .errors import ConfigError

    if "=" not in token:
        raise ConfigError(f"override '{token}' is not of the form key=value")
    key, raw = token.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def _merge(base, update, path, filename):
    from .errors import ConfigError

    for key, value in update.items():
        dotted = f"{path}.{key}" if path else key
        if key not in base:
            # Free-form mappings accept any key
            if path in ("data.categories", "data.synthetic"):
                base[key] = value
                continue
            raise ConfigError("unknown key", path=filename, field=dotted)
        if isinstance(base[key], dict) and path != "data.categories":
            if not isinstance(value, dict):
                raise ConfigError(
                    "expected a mapping", path=filename, field=dotted
                )
            _merge(base[key], value, dotted, filename)
        else:
            base[key] = value


def _set_dotted(tree, dotted, value, filename):
    from .errors import ConfigError

    keys = dotted.split(".")
    node = tree
    for depth, key in enumerate(keys[:-1]):
        if not isinstance(node.get(key), dict):
            prefix = ".".join(keys[: depth + 1])
            raise ConfigError("unknown key", path=filename, field=prefix)
        node = node[key]
    free = ".".join(keys[:-1]) in ("data.categories", "data.synthetic")
    if keys[-1] not in node and not free:
        raise ConfigError("unknown key", path=filename, field=dotted)
    node[keys[-1]] = value


def _get_dotted(tree, dotted):
    node = tree
    for key in dotted.split("."):
        node = node[key]
    return node


class PipelineConfig(object):
    """Merged and validated run configuration.

    The tree is read-only after construction; ``get`` takes dotted keys.
    """

    __slots__ = ["tree", "path", "base_dir"]

    def __init__(self, tree, path=None):
        self.tree = tree
        self.path = path
        self.base_dir = (
            os.path.dirname(os.path.abspath(path)) if path else os.getcwd()
        )

    def get(self, dotted):
        return _get_dotted(self.tree, dotted)

    def section(self, name):
        return copy.deepcopy(self.tree[name])

    @property
    def seed(self):
        return self.tree["seed"]

    @property
    def threads(self):
        return self.tree["threads"]

    @property
    def output_dir(self):
        return self.resolve(self.tree["output"]["dir"])

    def resolve(self, relpath):
        if os.path.isabs(relpath):
            return relpath
        return os.path.join(self.base_dir, relpath)

    def input_path(self, name):
        """Location of a ``data`` input; synthetic runs read from the
        generated dataset inside the output directory."""
        filename = self.tree["data"][name]
        if self.tree["data"]["source"] == "synthetic":
            return os.path.join(
                self.output_dir, "data", os.path.basename(filename)
            )
        return self.resolve(filename)

    def digest(self):
        canonical = json.dumps(
            self.tree, sort_keys=True, separators=(",", ":")
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def validate(tree, filename=None, check_files=True, base_dir=None):
    from .errors import ConfigError

    for dotted, check, expected in _RULES:
        value = _get_dotted(tree, dotted)
        if not check(value):
            raise ConfigError(
                f"invalid value {value!r}, expected {expected}",
                path=filename,
                field=dotted,
            )
    for layer in tree["network"]["layers"]:
        try:
            Moment.from_label(layer)
        except KeyError as e:
            raise ConfigError(
                str(e.args[0]), path=filename, field="network.layers"
            )
    for name, category in tree["data"]["categories"].items():
        if category not in CATEGORIES:
            raise ConfigError(
                f"category of '{name}' must be one of {CATEGORIES}",
                path=filename,
                field="data.categories",
            )
    if check_files and tree["data"]["source"] == "csv":
        base_dir = base_dir or os.getcwd()
        for key in ("prices",):
            path = tree["data"][key]
            if not os.path.isabs(path):
                path = os.path.join(base_dir, path)
            if not os.path.exists(path):
                raise ConfigError(
                    f"referenced file '{path}' does not exist",
                    path=filename,
                    field=f"data.{key}",
                )


def load_config(path=None, overrides=(), check_files=True):
    """Merge defaults, the JSON file at ``path`` and ``key=value``
    overrides into a validated :class:`PipelineConfig`."""
    tree = copy.deepcopy(DEFAULTS)
    if path is not None:
        from .errors import ConfigError

        user = load_json_config(path)
        if not isinstance(user, dict):
            raise ConfigError("top level must be a mapping", path=path)
        _merge(tree, user, "", path)
    for token in overrides:
        key, value = parse_override(token)
        _set_dotted(tree, key, value, path)
    config = PipelineConfig(tree, path)
    validate(tree, path, check_files=check_files, base_dir=config.base_dir)
    return config
