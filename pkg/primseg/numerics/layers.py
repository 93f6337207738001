#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

from __future__ import annotations

from typing import List, NamedTuple

import torch
from primseg.numerics.ops import (
    affine_backward,
    affine_forward,
    tanh_backward,
    tanh_forward,
)
from primseg.numerics.params import ParamTensor


class Affine:
    """x @ W + b with W, b initialized uniformly in +-1/sqrt(fan_in)."""

    def __init__(
        self,
        name: str,
        d_in: int,
        d_out: int,
        generator: torch.Generator,
        dtype: torch.dtype = torch.float64,
    ):
        self.name = name
        self.weight = ParamTensor.uniform_fan_in(
            f"{name}.weight", (d_in, d_out), d_in, generator, dtype
        )
        self.bias = ParamTensor.uniform_fan_in(
            f"{name}.bias", (d_out,), d_in, generator, dtype
        )

    @property
    def d_in(self) -> int:
        return self.weight.shape[0]

    @property
    def d_out(self) -> int:
        return self.weight.shape[1]

    def parameters(self) -> List[ParamTensor]:
        return [self.weight, self.bias]

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return affine_forward(x, self.weight, self.bias)

    def backward(self, grad_out: torch.Tensor, x: torch.Tensor) -> torch.Tensor:
        return affine_backward(grad_out, x, self.weight, self.bias)


class PerceptronCache(NamedTuple):
    x: torch.Tensor
    hidden: torch.Tensor


class TwoLayerPerceptron:
    """affine -> tanh -> affine. Shared by the point backbone and the kernel generator."""

    def __init__(
        self,
        name: str,
        d_in: int,
        d_hidden: int,
        d_out: int,
        generator: torch.Generator,
        dtype: torch.dtype = torch.float64,
    ):
        self.name = name
        self.first = Affine(f"{name}.fc1", d_in, d_hidden, generator, dtype)
        self.second = Affine(f"{name}.fc2", d_hidden, d_out, generator, dtype)

    @property
    def d_in(self) -> int:
        return self.first.d_in

    @property
    def d_out(self) -> int:
        return self.second.d_out

    def parameters(self) -> List[ParamTensor]:
        return self.first.parameters() + self.second.parameters()

    def forward(self, x: torch.Tensor):
        hidden = tanh_forward(self.first.forward(x))
        return self.second.forward(hidden), PerceptronCache(x, hidden)

    def backward(self, grad_out: torch.Tensor, cache: PerceptronCache) -> torch.Tensor:
        grad_hidden = self.second.backward(grad_out, cache.hidden)
        grad_pre = tanh_backward(grad_hidden, cache.hidden)
        return self.first.backward(grad_pre, cache.x)
