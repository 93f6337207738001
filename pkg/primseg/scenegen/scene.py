#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
import pathos
import primseg.utils_logging as utils_logging
from primseg.config import Config
from primseg.exceptions import ConfigurationError, GenerationError, SceneFormatError
from primseg.scenegen.primitives import sample_primitive, yaw_matrix
from primseg.scenegen.taxonomy import CategoryTemplate, SplitSpec
from primseg.utils import numpy_rng

logger = utils_logging.getLogger(logging.INFO)

UNLABELED = -1


@dataclass
class Scene:
    """A labeled point cloud.

    Attributes:
        points (np.ndarray): N x 3 coordinates in meters.
        labels (np.ndarray): N class ids in [0, class_count), or UNLABELED.
        object_ids (np.ndarray): N object ids.
        class_count (int): Number of classes in the taxonomy the scene came from.
    """

    points: np.ndarray
    labels: np.ndarray
    object_ids: np.ndarray
    class_count: int

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.object_ids = np.asarray(self.object_ids, dtype=np.int64)
        self.class_count = int(self.class_count)

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    def validate(self) -> None:
        """Raise SceneFormatError naming the first row that breaks an invariant."""
        if self.points.ndim != 2 or self.points.shape[1] != 3:
            raise SceneFormatError(f"points must be N x 3, got {self.points.shape}")
        n = self.points.shape[0]
        if n == 0:
            raise SceneFormatError("scene has no points")
        if self.labels.shape != (n,) or self.object_ids.shape != (n,):
            raise SceneFormatError(
                f"{n} points but {self.labels.shape[0]} labels and "
                f"{self.object_ids.shape[0]} object ids"
            )
        if self.class_count < 1:
            raise SceneFormatError(f"class_count must be >= 1, got {self.class_count}")
        bad = np.flatnonzero(~np.isfinite(self.points).all(axis=1))
        if bad.size:
            raise SceneFormatError(f"row {bad[0]}: non-finite coordinates {self.points[bad[0]]}")
        bad = np.flatnonzero(
            ((self.labels < 0) | (self.labels >= self.class_count))
            & (self.labels != UNLABELED)
        )
        if bad.size:
            raise SceneFormatError(
                f"row {bad[0]}: label {self.labels[bad[0]]} outside [0, {self.class_count})"
            )

    def copy(self) -> Scene:
        return Scene(
            points=self.points.copy(),
            labels=self.labels.copy(),
            object_ids=self.object_ids.copy(),
            class_count=self.class_count,
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, Scene):
            return NotImplemented
        return (
            self.class_count == other.class_count
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.object_ids, other.object_ids)
        )


@dataclass(frozen=True)
class SceneConfig:
    min_objects: int = 4
    max_objects: int = 7
    floor_extent: float = 8.0
    min_separation: float = 1.6
    max_retries: int = 500

    def __post_init__(self):
        if not 1 <= self.min_objects <= self.max_objects:
            raise ConfigurationError(
                f"need 1 <= min_objects <= max_objects, got {self.min_objects}, {self.max_objects}"
            )
        if self.floor_extent <= 0 or self.min_separation < 0:
            raise ConfigurationError(
                "floor_extent must be > 0 and min_separation >= 0"
            )

    @classmethod
    def from_config(cls, config: Config) -> SceneConfig:
        return cls(
            min_objects=config.getint("scenegen", "min_objects"),
            max_objects=config.getint("scenegen", "max_objects"),
            floor_extent=config.getfloat("scenegen", "floor_extent"),
            min_separation=config.getfloat("scenegen", "min_separation"),
            max_retries=config.getint("scenegen", "max_retries"),
        )


def _place_objects(
    n_objects: int, scene_cfg: SceneConfig, rng: np.random.Generator
) -> np.ndarray:
    half = scene_cfg.floor_extent / 2
    centers: List[np.ndarray] = []
    for i in range(n_objects):
        for _ in range(scene_cfg.max_retries):
            c = rng.uniform(-half, half, 2)
            if all(np.linalg.norm(c - o) >= scene_cfg.min_separation for o in centers):
                centers.append(c)
                break
        else:
            raise GenerationError(
                f"could not place object {i + 1} of {n_objects} after "
                f"{scene_cfg.max_retries} tries (floor {scene_cfg.floor_extent} m, "
                f"separation {scene_cfg.min_separation} m)"
            )
    return np.array(centers)


def generate_scene(
    templates: Sequence[CategoryTemplate],
    scene_cfg: SceneConfig,
    rng: np.random.Generator,
) -> Scene:
    """Place randomly chosen, jittered template instances on the floor plane.

    Args:
        templates (Sequence[CategoryTemplate]): Categories; class id = index.
        scene_cfg (SceneConfig): Object count range, floor size and spacing.
        rng (np.random.Generator): Generator owned by this scene.

    Returns:
        Scene: Fully labeled scene; object ids are 0..n_objects-1.
    """
    if len(templates) < 1:
        raise ConfigurationError("generate_scene needs at least one template")
    n_objects = int(rng.integers(scene_cfg.min_objects, scene_cfg.max_objects + 1))
    centers = _place_objects(n_objects, scene_cfg, rng)

    points, labels, object_ids = [], [], []
    for obj, (cx, cy) in enumerate(centers):
        class_id = int(rng.integers(len(templates)))
        rot = yaw_matrix(rng.uniform(0.0, 2 * np.pi))
        for part in templates[class_id].instantiate(rng):
            pts = sample_primitive(part, rng) @ rot.T + np.array([cx, cy, 0.0])
            points.append(pts)
            labels.append(np.full(pts.shape[0], class_id))
            object_ids.append(np.full(pts.shape[0], obj))

    scene = Scene(
        points=np.concatenate(points),
        labels=np.concatenate(labels),
        object_ids=np.concatenate(object_ids),
        class_count=len(templates),
    )
    scene.validate()
    return scene


def generate_scenes(
    templates: Sequence[CategoryTemplate],
    scene_cfg: SceneConfig,
    seed: int,
    split_name: str,
    n_scenes: int,
    nproc: int = 1,
) -> List[Scene]:
    """Generate n_scenes scenes, each from its own RNG derived from (seed, split_name, index).

    Serial and parallel generation give identical scenes.
    """

    def make(i: int) -> Scene:
        return generate_scene(templates, scene_cfg, numpy_rng(seed, "scene", split_name, i))

    logger.info(f"Generating {n_scenes} {split_name} scenes (nproc={nproc})")
    if nproc <= 1:
        return [make(i) for i in range(n_scenes)]

    pool = pathos.pools.ProcessPool(nodes=nproc)
    try:
        return list(pool.map(make, range(n_scenes)))
    finally:
        pool.close()
        pool.join()
        pool.clear()


def _check_split(scene: Scene, split: SplitSpec) -> None:
    present = set(np.unique(scene.labels[scene.labels != UNLABELED]).tolist())
    outside = present - (split.seen | split.unseen)
    if outside:
        raise ConfigurationError(
            f"scene has class ids {sorted(outside)} that are in neither seen nor unseen"
        )


def mask_unseen_labels(scene: Scene, split: SplitSpec) -> Scene:
    """Copy of scene with every unseen-class label replaced by UNLABELED.

    Geometry and object ids are untouched. Which points were unseen is not
    carried along; evaluation code gets it from unseen_region_mask on the
    unmasked scene.
    """
    _check_split(scene, split)
    masked = scene.copy()
    masked.labels[np.isin(masked.labels, split.unseen_ids)] = UNLABELED
    return masked


def unseen_region_mask(scene: Scene, split: SplitSpec) -> np.ndarray:
    """Boolean mask of points whose ground-truth class is unseen. Evaluation only."""
    _check_split(scene, split)
    return np.isin(scene.labels, split.unseen_ids)


@dataclass(frozen=True)
class AugmentStrength:
    """Ranges for the random rotation about z (radians), jitter std (meters) and isotropic scale."""

    rotation: Tuple[float, float] = (0.0, 0.0)
    jitter_sigma: float = 0.0
    scale: Tuple[float, float] = (1.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "rotation", tuple(float(r) for r in self.rotation))
        object.__setattr__(self, "scale", tuple(float(s) for s in self.scale))
        if len(self.rotation) != 2 or self.rotation[0] > self.rotation[1]:
            raise ConfigurationError(f"rotation must be a [lo, hi] range, got {self.rotation}")
        if len(self.scale) != 2 or not 0 < self.scale[0] <= self.scale[1]:
            raise ConfigurationError(f"scale must be a positive [lo, hi] range, got {self.scale}")
        if self.jitter_sigma < 0:
            raise ConfigurationError(f"jitter_sigma must be >= 0, got {self.jitter_sigma}")

    @classmethod
    def from_config(cls, config: Config, view: str) -> AugmentStrength:
        """Read the weak or strong view strengths from the [train] section."""
        if view not in ("weak", "strong"):
            raise ConfigurationError(f"view must be 'weak' or 'strong', got '{view}'")
        return cls(
            rotation=tuple(config.getlist("train", f"{view}_rotation")),
            jitter_sigma=config.getfloat("train", f"{view}_jitter"),
            scale=tuple(config.getlist("train", f"{view}_scale")),
        )


def _draw(bounds: Tuple[float, float], rng: np.random.Generator) -> float:
    lo, hi = bounds
    return lo if lo == hi else float(rng.uniform(lo, hi))


def augment_scene(
    scene: Scene, strength: AugmentStrength, rng: np.random.Generator
) -> Scene:
    """Rotate about z through the origin, jitter each point, then scale.

    Point order, labels and object ids are kept, so two augmentations of the
    same scene correspond row by row. Zero-strength steps are skipped and
    leave the coordinates bit-identical.
    """
    out = scene.copy()
    if strength.rotation != (0.0, 0.0):
        out.points = out.points @ yaw_matrix(_draw(strength.rotation, rng)).T
    if strength.jitter_sigma > 0:
        out.points = out.points + rng.normal(0.0, strength.jitter_sigma, out.points.shape)
    if strength.scale != (1.0, 1.0):
        out.points = out.points * _draw(strength.scale, rng)
    return out


def split_point_counts(scenes: Sequence[Scene], split: SplitSpec) -> Tuple[int, int]:
    """Total (seen, unseen) ground-truth point counts over scenes."""
    seen = unseen = 0
    for s in scenes:
        m = unseen_region_mask(s, split)
        unseen += int(m.sum())
        seen += int((~m & (s.labels != UNLABELED)).sum())
    return seen, unseen


__all__ = [
    "UNLABELED",
    "Scene",
    "SceneConfig",
    "generate_scene",
    "generate_scenes",
    "mask_unseen_labels",
    "unseen_region_mask",
    "AugmentStrength",
    "augment_scene",
    "split_point_counts",
]
