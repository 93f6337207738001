#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

from .config import Config
from .exceptions import (
    CheckpointError,
    ConfigurationError,
    EmbeddingFormatError,
    GenerationError,
    NumericError,
    PrimsegError,
    SceneFormatError,
)
from .version import __version__

__all__ = [
    "Config",
    "CheckpointError",
    "ConfigurationError",
    "EmbeddingFormatError",
    "GenerationError",
    "NumericError",
    "PrimsegError",
    "SceneFormatError",
    "__version__",
]
