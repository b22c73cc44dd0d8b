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

import numpy as np

__all__ = ["derive_seed", "generator", "generators", "key_entropy"]


def key_entropy(key):
    """Stable 32-bit integer for a key; integers pass through."""
    if isinstance(key, (int, np.integer)):
        if key < 0:
            raise ValueError("integer keys must be nonnegative")
        return int(key)
    digest = hashlib.sha256(str(key).encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")


def derive_seed(seed, *keys):
    if seed is None:
        seed = 0
    return np.random.SeedSequence(
        entropy=int(seed), spawn_key=tuple(key_entropy(k) for k in keys)
    )


def generator(seed, *keys):
    """Independent generator for the stream named by ``keys``.

    The stream depends only on ``(seed, keys)``, so results do not change
    with the order in which stages or workers run.
    """
    return np.random.default_rng(derive_seed(seed, *keys))


def generators(seed, count, *keys):
    """``count`` independent generators, one per draw index."""
    children = derive_seed(seed, *keys).spawn(count)
    return [np.random.default_rng(child) for child in children]
