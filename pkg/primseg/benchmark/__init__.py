#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

from .ablation import (
    Ablation,
    AblationCell,
    AblationGrid,
    METRIC_COLUMNS,
    parse_unseen_splits,
    summarize,
)
from .pathos_ablation import PathosAblation, run_ablation_grid
from .problem import SegmentationProblem, taxonomy_from_config

__all__ = [
    "Ablation",
    "AblationCell",
    "AblationGrid",
    "METRIC_COLUMNS",
    "parse_unseen_splits",
    "summarize",
    "PathosAblation",
    "run_ablation_grid",
    "SegmentationProblem",
    "taxonomy_from_config",
]
