#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.


class PrimsegError(Exception):
    """Base class for every error raised on purpose by primseg."""


class ConfigurationError(PrimsegError, ValueError):
    """Bad configuration: unknown keys, shape mismatches, invalid splits or dims."""


class NumericError(PrimsegError, ArithmeticError):
    """A NaN or Inf showed up where finite values are required."""


class SceneFormatError(PrimsegError, ValueError):
    """A scene file could not be parsed or failed validation."""


class EmbeddingFormatError(PrimsegError, ValueError):
    """An embedding file could not be parsed."""


class GenerationError(PrimsegError, RuntimeError):
    """Scene generation gave up (e.g. object placement ran out of retries)."""


class CheckpointError(PrimsegError, RuntimeError):
    """A checkpoint is truncated, from another format version, or has the wrong shapes."""
