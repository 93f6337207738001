#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

import copy

import numpy as np
import torch
from primseg.config import Config
from primseg.models.segmenter import ModelConfig
from primseg.scenegen.scene import Scene, UNLABELED
from primseg.scenegen.taxonomy import SplitSpec
from primseg.semantics import EmbeddingSource, EmbeddingTable

# small enough that a few epochs over a handful of scenes take seconds
MICRO_CONFIG = {
    "common": {"seed": "7"},
    "scenegen": {
        "n_train_scenes": "4",
        "n_test_scenes": "2",
        "min_objects": "2",
        "max_objects": "3",
        "floor_extent": "6.0",
        "min_separation": "1.5",
    },
    "semantics": {"dim": "24"},
    "model": {
        "feature_dim": "8",
        "attention_dim": "4",
        "n_prototypes": "6",
        "n_kernels": "2",
        "generator_hidden": "8",
        "k_neighbors": "8",
    },
    "train": {"epochs": "2", "batch_scenes": "2"},
    "ablation": {"seeds": "[0]", "kernel_counts": "[2]", "prototype_counts": "[6]"},
}

MICRO_MODEL = ModelConfig(
    feature_dim=8,
    attention_dim=4,
    n_prototypes=6,
    n_kernels=2,
    generator_hidden=8,
    k_neighbors=8,
)


def micro_config(**sections) -> Config:
    """MICRO_CONFIG with the given sections merged in.

    e.g. micro_config(loss={"variant": "seen_only"})
    """
    config_dict = copy.deepcopy(MICRO_CONFIG)
    for section, values in sections.items():
        config_dict.setdefault(section, {}).update({k: str(v) for k, v in values.items()})
    return Config(config_dict=config_dict)


def random_scene(
    rng: np.random.Generator, n_points: int = 60, class_count: int = 4, n_objects: int = 3
) -> Scene:
    labels = rng.integers(0, class_count, n_points)
    return Scene(
        points=rng.normal(size=(n_points, 3)),
        labels=labels,
        object_ids=rng.integers(0, n_objects, n_points),
        class_count=class_count,
    )


def random_embeddings(class_count: int = 4, dim: int = 12, seed: int = 0) -> EmbeddingTable:
    rng = np.random.default_rng(seed)
    return EmbeddingTable(
        [f"class_{i}" for i in range(class_count)],
        rng.normal(size=(class_count, dim)),
        EmbeddingSource.SYNTHETIC,
    )


def last_unseen_split(class_count: int = 4, n_unseen: int = 1) -> SplitSpec:
    return SplitSpec(
        seen=frozenset(range(class_count - n_unseen)),
        unseen=frozenset(range(class_count - n_unseen, class_count)),
    )


def masked(scene: Scene, split: SplitSpec) -> Scene:
    out = scene.copy()
    out.labels[np.isin(out.labels, split.unseen_ids)] = UNLABELED
    return out


def autograd_grad(fn, x: torch.Tensor) -> torch.Tensor:
    """Gradient of a scalar torch function at x, from autograd."""
    x = x.detach().clone().requires_grad_(True)
    fn(x).backward()
    return x.grad.detach()
