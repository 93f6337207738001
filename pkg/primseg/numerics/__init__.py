#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

from .checkpoint import FORMAT_VERSION, read_tensors, write_tensors
from .gradcheck import gradient_check, GradCheckReport, relative_error
from .layers import Affine, TwoLayerPerceptron
from .ops import (
    affine_backward,
    affine_forward,
    log_softmax,
    scaled_softmax,
    scaled_softmax_backward,
    tanh_backward,
    tanh_forward,
)
from .optim import Adam, adam_update, AdamState
from .params import ComputeConfig, ParamTensor, zero_grads

__all__ = [
    "FORMAT_VERSION",
    "read_tensors",
    "write_tensors",
    "gradient_check",
    "GradCheckReport",
    "relative_error",
    "Affine",
    "TwoLayerPerceptron",
    "affine_backward",
    "affine_forward",
    "log_softmax",
    "scaled_softmax",
    "scaled_softmax_backward",
    "tanh_backward",
    "tanh_forward",
    "Adam",
    "adam_update",
    "AdamState",
    "ComputeConfig",
    "ParamTensor",
    "zero_grads",
]
