#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

from .backbone import Backbone, extract_features
from .descriptors import DESCRIPTOR_DIM, DescriptorStandardizer, point_descriptor
from .kernels import (
    SemanticKernelBank,
    SemanticKernels,
    semantic_kernels,
    similarity,
    similarity_backward,
)
from .prototypes import PrototypeBank, VisualRepresentation, visual_representation
from .segmenter import ModelConfig, Segmenter

__all__ = [
    "Backbone",
    "extract_features",
    "DESCRIPTOR_DIM",
    "DescriptorStandardizer",
    "point_descriptor",
    "SemanticKernelBank",
    "SemanticKernels",
    "semantic_kernels",
    "similarity",
    "similarity_backward",
    "PrototypeBank",
    "VisualRepresentation",
    "visual_representation",
    "ModelConfig",
    "Segmenter",
]
