#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List

import torch
from primseg.config import Config
from primseg.exceptions import NumericError
from primseg.numerics.params import ParamTensor


@dataclass
class AdamState:
    """Moments and step counter for Adam. Defaults are the usual Adam defaults."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    first_moment: Dict[str, torch.Tensor] = field(default_factory=dict)
    second_moment: Dict[str, torch.Tensor] = field(default_factory=dict)


def adam_update(params: Iterable[ParamTensor], state: AdamState) -> None:
    """One bias-corrected Adam step, in place.

    Gradients are read but left untouched; the caller zeroes them.

    Args:
        params (Iterable[ParamTensor]): Parameters with populated gradients.
        state (AdamState): Optimizer state, updated in place.

    Raises:
        NumericError: if a gradient is non-finite (nothing is updated), or if a
            parameter becomes non-finite after the update.
    """
    params = list(params)
    for p in params:
        if not bool(torch.isfinite(p.grad).all()):
            raise NumericError(f"Non-finite gradient for parameter {p.name}!")

    state.step_count += 1
    t = state.step_count
    bias_correction1 = 1.0 - state.beta1**t
    bias_correction2 = 1.0 - state.beta2**t

    for p in params:
        if p.name not in state.first_moment:
            state.first_moment[p.name] = torch.zeros_like(p.values)
            state.second_moment[p.name] = torch.zeros_like(p.values)
        m = state.first_moment[p.name]
        v = state.second_moment[p.name]
        m.mul_(state.beta1).add_((1.0 - state.beta1) * p.grad)
        v.mul_(state.beta2).add_((1.0 - state.beta2) * p.grad * p.grad)
        denom = (v / bias_correction2).sqrt() + state.eps
        p.values -= state.lr * (m / bias_correction1) / denom
        p.check_finite()


class Adam:
    """Small wrapper tying a parameter list to its AdamState."""

    def __init__(
        self,
        params: List[ParamTensor],
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.params = params
        self.state = AdamState(lr=lr, beta1=beta1, beta2=beta2, eps=eps)

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

    def step(self) -> None:
        adam_update(self.params, self.state)

    @classmethod
    def from_config(cls, params: List[ParamTensor], config: Config) -> Adam:
        return cls(
            params,
            lr=config.getfloat("train", "lr"),
            beta1=config.getfloat("train", "beta1"),
            beta2=config.getfloat("train", "beta2"),
            eps=config.getfloat("train", "eps"),
        )

