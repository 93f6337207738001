#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

from __future__ import annotations

from typing import Dict, Sequence, Union

import numpy as np
import torch
from primseg.exceptions import CheckpointError, ConfigurationError
from primseg.scenegen.scene import Scene
from primseg.utils import check_finite
from scipy.spatial import cKDTree

DESCRIPTOR_DIM = 8
DESCRIPTOR_COLUMNS = (
    "height",
    "local_x",
    "local_y",
    "local_z",
    "eig_1",
    "eig_2",
    "eig_3",
    "density",
)

# inverse mean neighbor distance is capped for duplicated points
DENSITY_CAP = 1e4


def point_descriptor(scene: Union[Scene, np.ndarray], k_neighbors: int = 16) -> np.ndarray:
    """Hand-crafted per-point geometry.

    The neighborhood of a point is itself plus its k_neighbors - 1 nearest
    neighbors. Columns are, in order:

        height      z minus the scene's lowest z
        local_xyz   point minus the neighborhood centroid
        eig_1..3    covariance eigenvalues, descending, divided by their sum
        density     1 / mean distance to the other neighbors, capped

    Eigenvalues are clamped at 0 and a zero-variance neighborhood gets
    all-zero eigenvalue columns.

    Args:
        scene (Scene or np.ndarray): Scene, or bare N x 3 points.
        k_neighbors (int): Neighborhood size, >= 3.

    Returns:
        np.ndarray: N x 8 finite descriptors.
    """
    points = scene.points if isinstance(scene, Scene) else np.asarray(scene, dtype=np.float64)
    if k_neighbors < 3:
        raise ConfigurationError(f"k_neighbors must be >= 3, got {k_neighbors}")
    n = points.shape[0]
    if n < k_neighbors:
        raise ConfigurationError(
            f"scene has {n} points, fewer than k_neighbors = {k_neighbors}"
        )

    dists, idx = cKDTree(points).query(points, k=k_neighbors)
    neighborhoods = points[idx]
    centroid = neighborhoods.mean(axis=1)
    centered = neighborhoods - centroid[:, None, :]
    cov = np.einsum("nki,nkj->nij", centered, centered) / k_neighbors
    eig = np.clip(np.linalg.eigvalsh(cov)[:, ::-1], 0.0, None)
    total = eig.sum(axis=1, keepdims=True)
    eig = np.divide(eig, total, out=np.zeros_like(eig), where=total > 0)

    mean_dist = dists[:, 1:].mean(axis=1)
    density = np.minimum(
        np.divide(1.0, mean_dist, out=np.full_like(mean_dist, DENSITY_CAP), where=mean_dist > 0),
        DENSITY_CAP,
    )
    height = points[:, 2] - points[:, 2].min()
    desc = np.column_stack([height, points - centroid, eig, density])
    check_finite(desc, "point descriptors")
    return desc


class DescriptorStandardizer:
    """Per-column mean/std fitted on training descriptors.

    Stored in checkpoints next to the parameters so inference standardizes
    test scenes with training statistics.
    """

    def __init__(self, mean: np.ndarray, std: np.ndarray):
        self.mean = np.asarray(mean, dtype=np.float64)
        self.std = np.asarray(std, dtype=np.float64)
        assert self.mean.shape == self.std.shape == (DESCRIPTOR_DIM,)

    @classmethod
    def identity(cls) -> DescriptorStandardizer:
        return cls(np.zeros(DESCRIPTOR_DIM), np.ones(DESCRIPTOR_DIM))

    @classmethod
    def fit(cls, descriptors: Sequence[np.ndarray]) -> DescriptorStandardizer:
        stacked = np.concatenate(list(descriptors), axis=0)
        std = stacked.std(axis=0)
        # constant columns pass through centered but unscaled
        std[std < 1e-12] = 1.0
        return cls(stacked.mean(axis=0), std)

    def transform(
        self, descriptors: np.ndarray, dtype: torch.dtype = torch.float64
    ) -> torch.Tensor:
        if descriptors.ndim != 2 or descriptors.shape[1] != DESCRIPTOR_DIM:
            raise ConfigurationError(
                f"descriptors must be N x {DESCRIPTOR_DIM}, got {descriptors.shape}"
            )
        return torch.tensor((descriptors - self.mean) / self.std, dtype=dtype)

    def state_tensors(self) -> Dict[str, torch.Tensor]:
        return {
            "standardizer.mean": torch.tensor(self.mean),
            "standardizer.std": torch.tensor(self.std),
        }

    @classmethod
    def from_state(cls, tensors: Dict[str, torch.Tensor]) -> DescriptorStandardizer:
        try:
            return cls(
                tensors["standardizer.mean"].numpy(), tensors["standardizer.std"].numpy()
            )
        except (KeyError, AssertionError) as e:
            raise CheckpointError(f"checkpoint has no valid descriptor standardizer: {e}") from e
