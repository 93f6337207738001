#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import torch
from primseg.exceptions import ConfigurationError
from primseg.numerics.layers import PerceptronCache, TwoLayerPerceptron
from primseg.numerics.params import ParamTensor


@dataclass
class SemanticKernels:
    """Per-class kernels (C x K x R) and their sum over k (C x R)."""

    kernels: torch.Tensor
    aggregate: torch.Tensor

    @property
    def n_kernels(self) -> int:
        return self.kernels.shape[1]


class SemanticKernelBank:
    """One two-layer generator mapping a word embedding to K kernels of dim R.

    The generator output of length R*K is read as K consecutive blocks of R
    (entry k*R + r is kernel k, coordinate r). R is the number of prototypes,
    or the feature dim when the prototype bank is switched off.
    """

    def __init__(
        self,
        embed_dim: int,
        out_dim: int,
        n_kernels: int = 16,
        hidden_dim: int = 96,
        generator: torch.Generator = None,
        dtype: torch.dtype = torch.float64,
    ):
        if n_kernels < 1 or out_dim < 1 or embed_dim < 1 or hidden_dim < 1:
            raise ConfigurationError(
                f"kernel bank dims must be >= 1, got E={embed_dim}, H={hidden_dim}, "
                f"R={out_dim}, K={n_kernels}"
            )
        generator = generator or torch.Generator().manual_seed(0)
        self.n_kernels = n_kernels
        self.out_dim = out_dim
        self.generator = TwoLayerPerceptron(
            "generator", embed_dim, hidden_dim, out_dim * n_kernels, generator, dtype
        )

    @property
    def embed_dim(self) -> int:
        return self.generator.d_in

    def parameters(self) -> List[ParamTensor]:
        return self.generator.parameters()

    def forward(self, embeddings: torch.Tensor) -> Tuple[SemanticKernels, PerceptronCache]:
        if embeddings.dim() != 2 or embeddings.shape[1] != self.embed_dim:
            raise ConfigurationError(
                f"embeddings of shape {tuple(embeddings.shape)} do not fit a generator "
                f"with input dim {self.embed_dim}"
            )
        out, cache = self.generator.forward(embeddings)
        kernels = out.reshape(embeddings.shape[0], self.n_kernels, self.out_dim)
        return SemanticKernels(kernels, kernels.sum(dim=1)), cache

    def backward(self, grad_kernels: torch.Tensor, cache: PerceptronCache) -> torch.Tensor:
        c = grad_kernels.shape[0]
        return self.generator.backward(grad_kernels.reshape(c, -1), cache)


def semantic_kernels(
    embeddings: torch.Tensor, bank: SemanticKernelBank
) -> Tuple[SemanticKernels, PerceptronCache]:
    return bank.forward(embeddings)


def similarity(visual: torch.Tensor, kernels: SemanticKernels) -> torch.Tensor:
    """D[t, c] = sum_k <visual[t], kernels[c, k]>.

    Args:
        visual (torch.Tensor): T x R visual representation.
        kernels (SemanticKernels): C x K x R kernels.

    Returns:
        torch.Tensor: T x C similarity matrix.
    """
    if visual.shape[1] != kernels.kernels.shape[2]:
        raise ConfigurationError(
            f"visual representation has dim {visual.shape[1]} but kernels have dim "
            f"{kernels.kernels.shape[2]}"
        )
    return torch.einsum("tr,ckr->tc", visual, kernels.kernels)


def similarity_backward(
    grad_d: torch.Tensor, visual: torch.Tensor, kernels: SemanticKernels
) -> Tuple[torch.Tensor, torch.Tensor]:
    """Gradients of similarity with respect to visual (T x R) and kernels (C x K x R)."""
    grad_visual = torch.einsum("tc,ckr->tr", grad_d, kernels.kernels)
    per_class = grad_d.T @ visual
    grad_kernels = per_class.unsqueeze(1).expand(-1, kernels.n_kernels, -1).clone()
    return grad_visual, grad_kernels
