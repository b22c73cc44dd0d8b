#!/usr/bin/env python

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

from setuptools import setup

root_dir = os.path.dirname(os.path.realpath(__file__))

# The version lives in momentnet/config.py so the package does not have to
# be imported before its dependencies are installed
with open(os.path.join(root_dir, "momentnet", "config.py")) as f:
    version = next(
        line.split("=")[1].strip().strip('"')
        for line in f
        if line.startswith("VERSION = ")
    )

with open(os.path.join(root_dir, "README.md")) as f:
    long_description = f.read()

setup(
    name="momentnet",
    version=version,
    description="Multi-moment connectedness networks of bond and equity "
    "indices and their response to monetary policy shocks",
    long_description=long_description,
    long_description_content_type="text/markdown",
    license="Apache-2.0",
    packages=[
        "momentnet",
        "momentnet.linalg",
        "momentnet.random",
    ],
    python_requires=">=3.8",
    install_requires=[
        "numpy>=1.20",
        "scipy>=1.11",
        "opt_einsum>=3.3",
        "pandas>=1.4",
        "statsmodels>=0.13",
        "networkx>=2.6",
        "packaging",
    ],
    extras_require={"test": ["pytest"]},
    entry_points={
        "console_scripts": ["momentnet=momentnet.cli:main"],
    },
)
