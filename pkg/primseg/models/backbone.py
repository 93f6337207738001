#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

from __future__ import annotations

from typing import List, Tuple

import torch
from primseg.models.descriptors import DESCRIPTOR_DIM
from primseg.numerics.layers import PerceptronCache, TwoLayerPerceptron
from primseg.numerics.params import ParamTensor


class Backbone:
    """Per-point feature extractor: descriptor -> tanh hidden layer -> F-dim feature.

    Points are processed independently, so permuting the input rows permutes
    the output rows.
    """

    def __init__(
        self,
        feature_dim: int,
        generator: torch.Generator,
        d_in: int = DESCRIPTOR_DIM,
        dtype: torch.dtype = torch.float64,
    ):
        self.mlp = TwoLayerPerceptron(
            "backbone", d_in, feature_dim, feature_dim, generator, dtype
        )

    @property
    def feature_dim(self) -> int:
        return self.mlp.d_out

    def parameters(self) -> List[ParamTensor]:
        return self.mlp.parameters()

    def forward(self, descriptors: torch.Tensor) -> Tuple[torch.Tensor, PerceptronCache]:
        return self.mlp.forward(descriptors)

    def backward(self, grad_features: torch.Tensor, cache: PerceptronCache) -> torch.Tensor:
        return self.mlp.backward(grad_features, cache)


def extract_features(
    descriptors: torch.Tensor, backbone: Backbone
) -> Tuple[torch.Tensor, PerceptronCache]:
    return backbone.forward(descriptors)
