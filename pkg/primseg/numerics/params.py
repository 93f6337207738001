#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Tuple

import torch
from primseg.config import Config
from primseg.exceptions import ConfigurationError, NumericError
from primseg.utils import torch_generator

_PRECISIONS = {"double": torch.float64, "single": torch.float32}


@dataclass
class ComputeConfig:
    """Floating point width, seed and determinism switch shared by every block."""

    precision: str = "double"
    seed: int = 0
    deterministic: bool = True

    def __post_init__(self):
        if self.precision not in _PRECISIONS:
            raise ConfigurationError(
                f"precision should be one of {sorted(_PRECISIONS)}, got '{self.precision}'"
            )
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError(f"seed {self.seed} is not an unsigned 64-bit int")

    @property
    def dtype(self) -> torch.dtype:
        return _PRECISIONS[self.precision]

    def apply(self) -> None:
        """Make torch kernels deterministic and single-threaded when requested."""
        if self.deterministic:
            torch.use_deterministic_algorithms(True)
            torch.set_num_threads(1)

    def generator(self, *tags) -> torch.Generator:
        return torch_generator(self.seed, *tags)

    @classmethod
    def from_config(cls, config: Config) -> ComputeConfig:
        return cls(
            precision=config.get("common", "precision", fallback="double"),
            seed=config.getint("common", "seed"),
            deterministic=config.getboolean("common", "deterministic"),
        )


@dataclass
class ParamTensor:
    """A named learnable array with a same-shaped gradient accumulator."""

    name: str
    values: torch.Tensor
    grad: torch.Tensor = field(init=False)

    def __post_init__(self):
        self.values = self.values.detach().clone()
        self.grad = torch.zeros_like(self.values)

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.values.shape)

    def zero_grad(self) -> None:
        self.grad.zero_()

    def accumulate(self, g: torch.Tensor) -> None:
        if tuple(g.shape) != self.shape:
            raise ConfigurationError(
                f"gradient of shape {tuple(g.shape)} does not fit {self.name} {self.shape}"
            )
        self.grad += g

    def check_finite(self) -> None:
        if not bool(torch.isfinite(self.values).all()):
            raise NumericError(f"Parameter {self.name} holds non-finite values!")

    def numel(self) -> int:
        return self.values.numel()

    @classmethod
    def uniform_fan_in(
        cls,
        name: str,
        shape: Tuple[int, ...],
        fan_in: int,
        generator: torch.Generator,
        dtype: torch.dtype = torch.float64,
    ) -> ParamTensor:
        bound = 1.0 / math.sqrt(fan_in)
        u = torch.rand(shape, generator=generator, dtype=dtype)
        return cls(name, (2 * u - 1) * bound)

    @classmethod
    def gaussian(
        cls,
        name: str,
        shape: Tuple[int, ...],
        scale: float,
        generator: torch.Generator,
        dtype: torch.dtype = torch.float64,
    ) -> ParamTensor:
        return cls(name, torch.randn(shape, generator=generator, dtype=dtype) * scale)


def zero_grads(params: Iterable[ParamTensor]) -> None:
    for p in params:
        p.zero_grad()

