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

import hashlib
import json
import logging
import os

import numpy as np
import pandas as pd

from momentnet.errors import DataError, MissingInputError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.10g"


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path


def require(path, stage=None):
    if not os.path.exists(path):
        raise MissingInputError(path, stage=stage)
    return path


def read_csv(path, stage=None, **kwargs):
    require(path, stage)
    try:
        return pd.read_csv(path, **kwargs)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataError(f"{path}: cannot parse CSV: {e}")


def write_csv(frame, path, index=False):
    ensure_dir(os.path.dirname(os.path.abspath(path)))
    frame.to_csv(path, index=index, float_format=FLOAT_FORMAT, na_rep="")
    logger.debug("wrote path=%s rows=%d", path, len(frame))
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if np.isfinite(value) else None
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (pd.Timestamp, pd.Period)):
        return str(obj.date() if isinstance(obj, pd.Timestamp) else obj)
    return obj


def write_json(obj, path):
    ensure_dir(os.path.dirname(os.path.abspath(path)))
    with open(path, "w") as f:
        json.dump(_jsonable(obj), f, indent=2, sort_keys=True)
        f.write("\n")
    logger.debug("wrote path=%s", path)
    return path


def read_json(path, stage=None):
    require(path, stage)
    try:
        with open(path, "r") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise DataError(f"{path}: invalid JSON: {e.msg}")


def sha256_file(path, chunk=1 << 20):
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(chunk), b""):
            digest.update(block)
    return digest.hexdigest()
