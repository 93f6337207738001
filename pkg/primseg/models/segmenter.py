#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any, Dict, List, NamedTuple, Optional

import torch
from primseg.config import Config
from primseg.exceptions import CheckpointError, ConfigurationError
from primseg.models.backbone import Backbone
from primseg.models.descriptors import DescriptorStandardizer
from primseg.models.kernels import (
    SemanticKernelBank,
    SemanticKernels,
    similarity,
    similarity_backward,
)
from primseg.models.prototypes import AttentionCache, PrototypeBank
from primseg.numerics.layers import PerceptronCache
from primseg.numerics.params import ComputeConfig, ParamTensor


@dataclass(frozen=True)
class ModelConfig:
    feature_dim: int = 96
    attention_dim: int = 16
    n_prototypes: int = 128
    n_kernels: int = 16
    generator_hidden: int = 96
    k_neighbors: int = 16
    lam: float = 4.0
    use_prototypes: bool = True

    def __post_init__(self):
        for name in (
            "feature_dim",
            "attention_dim",
            "n_prototypes",
            "n_kernels",
            "generator_hidden",
        ):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.k_neighbors < 3:
            raise ConfigurationError(f"k_neighbors must be >= 3, got {self.k_neighbors}")
        if self.lam < 0:
            raise ConfigurationError(f"lambda must be >= 0, got {self.lam}")

    @property
    def representation_dim(self) -> int:
        return self.n_prototypes if self.use_prototypes else self.feature_dim

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_config(cls, config: Config) -> ModelConfig:
        return cls(
            feature_dim=config.getint("model", "feature_dim"),
            attention_dim=config.getint("model", "attention_dim"),
            n_prototypes=config.getint("model", "n_prototypes"),
            n_kernels=config.getint("model", "n_kernels"),
            generator_hidden=config.getint("model", "generator_hidden"),
            k_neighbors=config.getint("model", "k_neighbors"),
            lam=config.getfloat("model", "lambda"),
            use_prototypes=config.getboolean("model", "use_prototypes"),
        )


class ForwardCache(NamedTuple):
    backbone: PerceptronCache
    attention: Optional[AttentionCache]
    visual: torch.Tensor
    kernels: SemanticKernels
    generator: PerceptronCache


class Segmenter:
    """descriptor -> feature -> prototype attention -> similarity to class kernels.

    With use_prototypes off, the backbone feature is used directly as the
    visual representation and the generator emits kernels of the feature dim.
    """

    def __init__(
        self,
        model_config: ModelConfig,
        embed_dim: int,
        compute: Optional[ComputeConfig] = None,
        standardizer: Optional[DescriptorStandardizer] = None,
    ):
        self.config = model_config
        self.compute = compute or ComputeConfig()
        self.standardizer = standardizer or DescriptorStandardizer.identity()
        dtype = self.compute.dtype
        self.backbone = Backbone(
            model_config.feature_dim, self.compute.generator("init", "backbone"), dtype=dtype
        )
        self.bank: Optional[PrototypeBank] = None
        if model_config.use_prototypes:
            self.bank = PrototypeBank(
                feature_dim=model_config.feature_dim,
                attention_dim=model_config.attention_dim,
                n_prototypes=model_config.n_prototypes,
                lam=model_config.lam,
                generator=self.compute.generator("init", "bank"),
                dtype=dtype,
            )
        self.kernel_bank = SemanticKernelBank(
            embed_dim=embed_dim,
            out_dim=model_config.representation_dim,
            n_kernels=model_config.n_kernels,
            hidden_dim=model_config.generator_hidden,
            generator=self.compute.generator("init", "generator"),
            dtype=dtype,
        )

    def parameters(self) -> List[ParamTensor]:
        params = self.backbone.parameters()
        if self.bank is not None:
            params = params + self.bank.parameters()
        return params + self.kernel_bank.parameters()

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def forward(self, descriptors: torch.Tensor, embeddings: torch.Tensor):
        """Similarity matrix D (T x C) for standardized descriptors and class embeddings.

        Returns:
            Tuple[torch.Tensor, ForwardCache]: D and what backward needs.
        """
        features, backbone_cache = self.backbone.forward(descriptors)
        attention_cache = None
        visual = features
        if self.bank is not None:
            vis, attention_cache = self.bank.forward(features)
            visual = vis.alpha
        kernels, generator_cache = self.kernel_bank.forward(embeddings)
        d = similarity(visual, kernels)
        return d, ForwardCache(backbone_cache, attention_cache, visual, kernels, generator_cache)

    def backward(self, grad_d: torch.Tensor, cache: ForwardCache) -> None:
        grad_visual, grad_kernels = similarity_backward(grad_d, cache.visual, cache.kernels)
        self.kernel_bank.backward(grad_kernels, cache.generator)
        grad_features = grad_visual
        if self.bank is not None:
            grad_features = self.bank.backward(grad_visual, cache.attention)
        self.backbone.backward(grad_features, cache.backbone)

    def standardize(self, descriptors) -> torch.Tensor:
        return self.standardizer.transform(descriptors, dtype=self.compute.dtype)

    def state_tensors(self) -> Dict[str, torch.Tensor]:
        tensors = {p.name: p.values for p in self.parameters()}
        tensors.update(self.standardizer.state_tensors())
        return tensors

    def load_state(self, tensors: Dict[str, torch.Tensor]) -> None:
        """Copy saved arrays into this model; names and shapes must match exactly."""
        params = {p.name: p for p in self.parameters()}
        expected = set(params) | {"standardizer.mean", "standardizer.std"}
        missing = sorted(expected - set(tensors))
        unexpected = sorted(set(tensors) - expected)
        if missing or unexpected:
            raise CheckpointError(
                f"checkpoint tensors do not match the model: missing {missing}, "
                f"unexpected {unexpected}"
            )
        for name, p in params.items():
            saved = tensors[name]
            if tuple(saved.shape) != p.shape:
                raise CheckpointError(
                    f"tensor {name} has shape {tuple(saved.shape)} in the checkpoint "
                    f"but {p.shape} in the model"
                )
        for name, p in params.items():
            p.values = tensors[name].to(dtype=self.compute.dtype).clone()
            p.grad = torch.zeros_like(p.values)
        self.standardizer = DescriptorStandardizer.from_state(tensors)
