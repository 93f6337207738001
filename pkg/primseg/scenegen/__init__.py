#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

from .io import (
    read_scene,
    read_scene_dir,
    read_split,
    write_scene,
    write_scene_dir,
    write_split,
)
from .primitives import PRIMITIVE_KINDS, PrimitiveKind, PrimitiveSpec, sample_primitive
from .scene import (
    AugmentStrength,
    Scene,
    SceneConfig,
    UNLABELED,
    augment_scene,
    generate_scene,
    generate_scenes,
    mask_unseen_labels,
    split_point_counts,
    unseen_region_mask,
)
from .taxonomy import (
    CategoryTemplate,
    DEFAULT_ANALOG_PAIRS,
    SplitSpec,
    TemplatePart,
    default_taxonomy,
    load_taxonomy,
    mixture_matrix,
    mixture_overlap,
    write_taxonomy,
)

__all__ = [
    "read_scene",
    "read_scene_dir",
    "read_split",
    "write_scene",
    "write_scene_dir",
    "write_split",
    "PRIMITIVE_KINDS",
    "PrimitiveKind",
    "PrimitiveSpec",
    "sample_primitive",
    "AugmentStrength",
    "Scene",
    "SceneConfig",
    "UNLABELED",
    "augment_scene",
    "generate_scene",
    "generate_scenes",
    "mask_unseen_labels",
    "split_point_counts",
    "unseen_region_mask",
    "CategoryTemplate",
    "DEFAULT_ANALOG_PAIRS",
    "SplitSpec",
    "TemplatePart",
    "default_taxonomy",
    "load_taxonomy",
    "mixture_matrix",
    "mixture_overlap",
    "write_taxonomy",
]
