#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Any, Dict, List, Sequence, Tuple

import primseg.utils_logging as utils_logging
from primseg.config import Config
from primseg.exceptions import ConfigurationError
from primseg.scenegen.io import read_scene_dir, read_split
from primseg.scenegen.scene import (
    generate_scenes,
    mask_unseen_labels,
    Scene,
    SceneConfig,
    split_point_counts,
)
from primseg.scenegen.taxonomy import (
    CategoryTemplate,
    default_taxonomy,
    load_taxonomy,
    mixture_matrix,
    SplitSpec,
)
from primseg.semantics import embeddings_from_config, EmbeddingTable

logger = utils_logging.getLogger(logging.INFO)

SPLIT_FILE = "split.json"
TAXONOMY_FILE = "taxonomy.json"


def taxonomy_from_config(config: Config) -> Tuple[List[CategoryTemplate], SplitSpec]:
    """Templates and split from [scenegen] taxonomy_path / unseen.

    An empty taxonomy_path means the built-in taxonomy; an empty unseen list
    means the split stored with the taxonomy.
    """
    path = config.get("scenegen", "taxonomy_path")
    unseen = config.getlist("scenegen", "unseen", element_type=str)
    if path:
        templates, stored_unseen = load_taxonomy(path)
        if not unseen:
            if stored_unseen is None:
                raise ConfigurationError(
                    f"{path} names no unseen classes; set [scenegen] unseen"
                )
            unseen = stored_unseen
    else:
        templates, split = default_taxonomy()
        if not unseen:
            return templates, split
    names = [t.name for t in templates]
    return templates, SplitSpec.from_names(names, unseen)


@dataclass
class SegmentationProblem:
    """Everything one training run consumes: taxonomy, split, class vectors and scenes.

    train_scenes and test_scenes carry full ground truth. Training code only
    ever sees masked_train_scenes.
    """

    templates: List[CategoryTemplate]
    split: SplitSpec
    embeddings: EmbeddingTable
    train_scenes: List[Scene]
    test_scenes: List[Scene]

    def __post_init__(self):
        self.split.validate(len(self.templates))
        if self.embeddings.class_names != self.class_names:
            raise ConfigurationError(
                f"embedding classes {self.embeddings.class_names} do not match "
                f"taxonomy classes {self.class_names}"
            )

    @property
    def class_names(self) -> List[str]:
        return [t.name for t in self.templates]

    @cached_property
    def masked_train_scenes(self) -> List[Scene]:
        return [mask_unseen_labels(s, self.split) for s in self.train_scenes]

    def with_unseen(self, unseen_names: Sequence[str]) -> SegmentationProblem:
        """The same scenes and class vectors with unseen_names held out instead."""
        return replace(self, split=SplitSpec.from_names(self.class_names, unseen_names))

    @property
    def metadata(self) -> Dict[str, Any]:
        seen_points, unseen_points = split_point_counts(self.train_scenes, self.split)
        return {
            "n_classes": len(self.templates),
            "unseen": [self.class_names[c] for c in self.split.unseen_ids],
            "n_train_scenes": len(self.train_scenes),
            "n_test_scenes": len(self.test_scenes),
            "train_seen_points": seen_points,
            "train_unseen_points": unseen_points,
            "embedding_source": self.embeddings.source.value,
        }

    @classmethod
    def from_config(cls, config: Config) -> SegmentationProblem:
        """Read scenes from [data] scene_dir, or generate them when it is empty."""
        templates, split = taxonomy_from_config(config)
        names = [t.name for t in templates]
        scene_dir = config.get("data", "scene_dir")
        if scene_dir:
            split_path = os.path.join(scene_dir, SPLIT_FILE)
            if os.path.exists(split_path):
                stored, stored_names = read_split(split_path)
                if stored != split or stored_names != names:
                    raise ConfigurationError(
                        f"{split_path} does not match the configured taxonomy and split"
                    )
            train_scenes = read_scene_dir(scene_dir, "train")
            test_scenes = read_scene_dir(scene_dir, "test")
            for s in train_scenes + test_scenes:
                if s.class_count != len(names):
                    raise ConfigurationError(
                        f"scenes in {scene_dir} have {s.class_count} classes, "
                        f"taxonomy has {len(names)}"
                    )
            logger.info(
                f"Read {len(train_scenes)} train and {len(test_scenes)} test scenes "
                f"from {scene_dir}"
            )
        else:
            scene_cfg = SceneConfig.from_config(config)
            seed = config.getint("common", "seed")
            nproc = config.getint("scenegen", "nproc")
            train_scenes = generate_scenes(
                templates,
                scene_cfg,
                seed,
                "train",
                config.getint("scenegen", "n_train_scenes"),
                nproc,
            )
            test_scenes = generate_scenes(
                templates,
                scene_cfg,
                seed,
                "test",
                config.getint("scenegen", "n_test_scenes"),
                nproc,
            )
        embeddings = embeddings_from_config(config, names, mixture_matrix(templates))
        return cls(templates, split, embeddings, train_scenes, test_scenes)
