#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

from __future__ import annotations

from dataclasses import dataclass
from typing import List, NamedTuple, Tuple

import torch
from primseg.exceptions import ConfigurationError
from primseg.numerics.layers import Affine
from primseg.numerics.ops import scaled_softmax, scaled_softmax_backward
from primseg.numerics.params import ParamTensor

PROTOTYPE_INIT_SCALE = 0.1


@dataclass
class VisualRepresentation:
    """T x M attention of each point over the prototypes; rows sum to 1."""

    alpha: torch.Tensor

    @property
    def dim(self) -> int:
        return self.alpha.shape[1]


class AttentionCache(NamedTuple):
    features: torch.Tensor
    projected_points: torch.Tensor
    projected_prototypes: torch.Tensor
    alpha: torch.Tensor


class PrototypeBank:
    """M learnable geometric primitives attended to by every point.

    Points are projected with theta, prototypes with phi (separate weights),
    and the attention is a softmax over dot products with inverse
    temperature lam.
    """

    def __init__(
        self,
        feature_dim: int = 96,
        attention_dim: int = 16,
        n_prototypes: int = 128,
        lam: float = 4.0,
        generator: torch.Generator = None,
        dtype: torch.dtype = torch.float64,
    ):
        if n_prototypes < 1 or attention_dim < 1 or feature_dim < 1:
            raise ConfigurationError(
                f"prototype bank dims must be >= 1, got M={n_prototypes}, "
                f"A={attention_dim}, F={feature_dim}"
            )
        if lam < 0:
            raise ConfigurationError(f"lambda must be >= 0, got {lam}")
        generator = generator or torch.Generator().manual_seed(0)
        self.lam = float(lam)
        self.prototypes = ParamTensor.gaussian(
            "bank.prototypes",
            (n_prototypes, feature_dim),
            PROTOTYPE_INIT_SCALE,
            generator,
            dtype,
        )
        self.key_proj = Affine("bank.theta", feature_dim, attention_dim, generator, dtype)
        self.query_proj = Affine("bank.phi", feature_dim, attention_dim, generator, dtype)

    @property
    def n_prototypes(self) -> int:
        return self.prototypes.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.prototypes.shape[1]

    def parameters(self) -> List[ParamTensor]:
        return [self.prototypes] + self.key_proj.parameters() + self.query_proj.parameters()

    def forward(self, features: torch.Tensor) -> Tuple[VisualRepresentation, AttentionCache]:
        if features.shape[-1] != self.feature_dim:
            raise ConfigurationError(
                f"features have dim {features.shape[-1]}, prototype bank expects {self.feature_dim}"
            )
        projected_points = self.key_proj.forward(features)
        projected_prototypes = self.query_proj.forward(self.prototypes.values)
        alpha = scaled_softmax(projected_points @ projected_prototypes.T, self.lam)
        cache = AttentionCache(features, projected_points, projected_prototypes, alpha)
        return VisualRepresentation(alpha), cache

    def backward(self, grad_alpha: torch.Tensor, cache: AttentionCache) -> torch.Tensor:
        """Accumulate into prototypes, theta and phi; return the feature gradient."""
        grad_logits = scaled_softmax_backward(grad_alpha, cache.alpha, self.lam)
        grad_points = grad_logits @ cache.projected_prototypes
        grad_prototypes = grad_logits.T @ cache.projected_points
        self.prototypes.accumulate(
            self.query_proj.backward(grad_prototypes, self.prototypes.values)
        )
        return self.key_proj.backward(grad_points, cache.features)


def visual_representation(
    features: torch.Tensor, bank: PrototypeBank
) -> Tuple[VisualRepresentation, AttentionCache]:
    return bank.forward(features)
