#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

import os

from setuptools import find_packages, setup

root_dir = os.path.dirname(__file__)

REQUIRES = [
    "torch>=1.13",  # weights_only checkpoint loading
    "numpy>=1.20",
    "scipy",
    "scikit-learn",
    "pandas",
    "tqdm",
    "pathos",
]

DEV_REQUIRES = [
    "coverage",
    "flake8",
    "black",
    "mypy",
    "parameterized",
]

with open(os.path.join(root_dir, "Readme.md"), "r") as fh:
    long_description = fh.read()

with open(os.path.join(root_dir, "primseg", "version.py"), "r") as fh:
    for line in fh.readlines():
        if line.startswith("__version__"):
            version = line.split('"')[1]


setup(
    name="primseg",
    version=version,
    python_requires=">=3.8",
    packages=find_packages(exclude=["tests", "tests.*"]),
    description="Zero-shot point cloud segmentation with learnable geometric primitives",
    long_description=long_description,
    long_description_content_type="text/markdown",
    install_requires=REQUIRES,
    extras_require={"dev": DEV_REQUIRES},
    entry_points={
        "console_scripts": [
            "primseg = primseg.cli.main:main",
        ],
    },
)
