#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

"""Hand-wired forward/backward pairs.

Each forward returns its output; each backward takes the upstream gradient plus
whatever the forward needs to remember, accumulates into ParamTensor.grad, and
returns the gradient with respect to its input. There is no tape: the model
graph is fixed, so every block calls these in reverse order by hand.
"""

from typing import Union

import torch
from primseg.exceptions import ConfigurationError, NumericError
from primseg.numerics.params import ParamTensor


def affine_forward(
    x: torch.Tensor, weights: ParamTensor, bias: ParamTensor
) -> torch.Tensor:
    """out[n] = x[n] @ W + b.

    Args:
        x (torch.Tensor): Input, N x D_in.
        weights (ParamTensor): D_in x D_out.
        bias (ParamTensor): D_out.

    Returns:
        torch.Tensor: N x D_out output.
    """
    if x.dim() != 2 or weights.values.dim() != 2:
        raise ConfigurationError(
            f"affine expects 2-d input and weights, got {tuple(x.shape)} and {weights.shape}"
        )
    d_in, d_out = weights.shape
    if x.shape[1] != d_in:
        raise ConfigurationError(
            f"{weights.name}: input has {x.shape[1]} columns but weights expect {d_in}"
        )
    if bias.shape != (d_out,):
        raise ConfigurationError(
            f"{bias.name}: bias shape {bias.shape} does not match output dim {d_out}"
        )
    return x @ weights.values + bias.values


def affine_backward(
    grad_out: torch.Tensor,
    x: torch.Tensor,
    weights: ParamTensor,
    bias: ParamTensor,
) -> torch.Tensor:
    weights.accumulate(x.T @ grad_out)
    bias.accumulate(grad_out.sum(dim=0))
    return grad_out @ weights.values.T


def tanh_forward(x: torch.Tensor) -> torch.Tensor:
    return torch.tanh(x)


def tanh_backward(grad_out: torch.Tensor, out: torch.Tensor) -> torch.Tensor:
    # d tanh(x)/dx written in terms of the output
    return grad_out * (1 - out * out)


def scaled_softmax(logits: torch.Tensor, scale: Union[float, torch.Tensor]) -> torch.Tensor:
    """Softmax of scale * logits along the last dimension.

    The row maximum is subtracted before scaling, so any finite input gives
    rows summing to 1. Entries whose scaled gap to the maximum exceeds about
    745 underflow to 0.

    Args:
        logits (torch.Tensor): [..., M] finite logits.
        scale (float): Non-negative inverse temperature.

    Returns:
        torch.Tensor: [..., M] non-negative rows summing to 1.
    """
    if not bool(torch.isfinite(logits).all()):
        raise NumericError("scaled_softmax got non-finite logits!")
    if float(scale) < 0:
        raise ConfigurationError(f"softmax scale must be >= 0, got {float(scale)}")
    if float(scale) == 0:
        return torch.full_like(logits, 1.0 / logits.shape[-1])
    # the gap to the max can be -inf for extreme finite logits; exp maps it to 0
    z = scale * (logits - logits.max(dim=-1, keepdim=True).values)
    e = torch.exp(z)
    return e / e.sum(dim=-1, keepdim=True)


def scaled_softmax_backward(
    grad_out: torch.Tensor, probs: torch.Tensor, scale: Union[float, torch.Tensor]
) -> torch.Tensor:
    # softmax Jacobian: p * (g - <g, p>), then the chain rule through the scale
    inner = (grad_out * probs).sum(dim=-1, keepdim=True)
    return scale * probs * (grad_out - inner)


def log_softmax(logits: torch.Tensor) -> torch.Tensor:
    z = logits - logits.max(dim=-1, keepdim=True).values
    return z - torch.log(torch.exp(z).sum(dim=-1, keepdim=True))
