#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Sequence, Tuple

import numpy as np
from primseg.exceptions import ConfigurationError


class PrimitiveKind(str, Enum):
    CUBOID = "cuboid"
    CYLINDER = "cylinder"
    SPHERE = "sphere"
    CONE = "cone"
    TORUS = "torus"
    PYRAMID = "pyramid"


# names of the size parameters per kind, in order (meters)
SIZE_PARAMS: Dict[PrimitiveKind, Tuple[str, ...]] = {
    PrimitiveKind.CUBOID: ("size_x", "size_y", "size_z"),
    PrimitiveKind.CYLINDER: ("radius", "height"),
    PrimitiveKind.SPHERE: ("radius",),
    PrimitiveKind.CONE: ("radius", "height"),
    PrimitiveKind.TORUS: ("major_radius", "minor_radius"),
    PrimitiveKind.PYRAMID: ("base", "height"),
}

PRIMITIVE_KINDS: Tuple[PrimitiveKind, ...] = tuple(PrimitiveKind)


@dataclass(frozen=True)
class PrimitiveSpec:
    """One posed primitive.

    Every primitive is modeled centered on its own bounding box, with its axis
    (cylinder, cone, pyramid apex, torus normal) along +z. The pose rotates it
    about the vertical axis and then moves the bounding-box center to translation.
    """

    kind: PrimitiveKind
    size: Tuple[float, ...]
    translation: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    yaw: float = 0.0
    point_budget: int = 100

    def __post_init__(self):
        object.__setattr__(self, "kind", PrimitiveKind(self.kind))
        object.__setattr__(self, "size", tuple(float(s) for s in self.size))
        object.__setattr__(
            self, "translation", tuple(float(t) for t in self.translation)
        )
        expected = SIZE_PARAMS[self.kind]
        if len(self.size) != len(expected):
            raise ConfigurationError(
                f"{self.kind.value} needs sizes {expected}, got {self.size}"
            )
        if any(not np.isfinite(s) or s <= 0 for s in self.size):
            raise ConfigurationError(
                f"{self.kind.value} sizes must be strictly positive, got {self.size}"
            )
        if self.kind == PrimitiveKind.TORUS and self.size[1] >= self.size[0]:
            raise ConfigurationError(
                f"torus minor radius {self.size[1]} must be below major radius {self.size[0]}"
            )
        if len(self.translation) != 3:
            raise ConfigurationError(f"translation must be a 3-vector, got {self.translation}")
        if int(self.point_budget) <= 0:
            raise ConfigurationError(f"point_budget must be > 0, got {self.point_budget}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "size": list(self.size),
            "translation": list(self.translation),
            "yaw": self.yaw,
            "point_budget": int(self.point_budget),
        }

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> PrimitiveSpec:
        return cls(
            kind=PrimitiveKind(d["kind"]),
            size=tuple(d["size"]),
            translation=tuple(d.get("translation", (0.0, 0.0, 0.0))),
            yaw=float(d.get("yaw", 0.0)),
            point_budget=int(d["point_budget"]),
        )


def yaw_matrix(yaw: float) -> np.ndarray:
    c, s = np.cos(yaw), np.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _split_by_area(
    n: int, areas: Sequence[float], rng: np.random.Generator
) -> np.ndarray:
    areas = np.asarray(areas, dtype=float)
    return rng.multinomial(n, areas / areas.sum())


def _disk(n: int, radius: float, z: float, rng: np.random.Generator) -> np.ndarray:
    # sqrt on the radius keeps the density uniform over the disk area
    rho = radius * np.sqrt(rng.random(n))
    theta = rng.uniform(0.0, 2 * np.pi, n)
    return np.c_[rho * np.cos(theta), rho * np.sin(theta), np.full(n, z)]


def _triangle(n: int, a, b, c, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(n)
    v = rng.random(n)
    flip = u + v > 1
    u[flip], v[flip] = 1 - u[flip], 1 - v[flip]
    a, b, c = (np.asarray(p, dtype=float) for p in (a, b, c))
    return a + u[:, None] * (b - a) + v[:, None] * (c - a)


def _sample_cuboid(size, n, rng):
    sx, sy, sz = size
    # faces: +-x (sy*sz), +-y (sx*sz), +-z (sx*sy)
    counts = _split_by_area(n, [sy * sz, sy * sz, sx * sz, sx * sz, sx * sy, sx * sy], rng)
    half = np.array([sx, sy, sz]) / 2
    chunks = []
    for face, k in enumerate(counts):
        axis, sign = divmod(face, 2)
        pts = rng.uniform(-half, half, size=(k, 3))
        pts[:, axis] = half[axis] if sign == 0 else -half[axis]
        chunks.append(pts)
    return np.concatenate(chunks, axis=0)


def _sample_cylinder(size, n, rng):
    r, h = size
    # lateral 2*pi*r*h, two caps pi*r^2 each
    n_side, n_top, n_bottom = _split_by_area(
        n, [2 * np.pi * r * h, np.pi * r * r, np.pi * r * r], rng
    )
    theta = rng.uniform(0.0, 2 * np.pi, n_side)
    z = rng.uniform(-h / 2, h / 2, n_side)
    side = np.c_[r * np.cos(theta), r * np.sin(theta), z]
    return np.concatenate(
        [side, _disk(n_top, r, h / 2, rng), _disk(n_bottom, r, -h / 2, rng)], axis=0
    )


def _sample_sphere(size, n, rng):
    (r,) = size
    # normalized isotropic gaussians are uniform on the sphere
    v = rng.standard_normal((n, 3))
    return r * v / np.linalg.norm(v, axis=1, keepdims=True)


def _sample_cone(size, n, rng):
    r, h = size
    slant = np.hypot(r, h)
    # lateral pi*r*slant, base pi*r^2
    n_side, n_base = _split_by_area(n, [np.pi * r * slant, np.pi * r * r], rng)
    # distance from the apex grows like sqrt(u) for uniform lateral density
    t = np.sqrt(rng.random(n_side))
    theta = rng.uniform(0.0, 2 * np.pi, n_side)
    side = np.c_[r * t * np.cos(theta), r * t * np.sin(theta), h / 2 - h * t]
    return np.concatenate([side, _disk(n_base, r, -h / 2, rng)], axis=0)


def _sample_pyramid(size, n, rng):
    a, h = size
    half = a / 2
    # square base a^2, four triangles of area (a/2) * slant height
    tri_area = half * np.hypot(h, half)
    counts = _split_by_area(n, [a * a] + [tri_area] * 4, rng)
    base = np.c_[
        rng.uniform(-half, half, counts[0]),
        rng.uniform(-half, half, counts[0]),
        np.full(counts[0], -h / 2),
    ]
    apex = (0.0, 0.0, h / 2)
    corners = [
        (half, half, -h / 2),
        (-half, half, -h / 2),
        (-half, -half, -h / 2),
        (half, -half, -h / 2),
    ]
    sides = [
        _triangle(counts[i + 1], apex, corners[i], corners[(i + 1) % 4], rng)
        for i in range(4)
    ]
    return np.concatenate([base] + sides, axis=0)


def _sample_torus(size, n, rng):
    big_r, small_r = size
    # area element is proportional to (R + r cos(phi)); rejection-sample phi
    phis = []
    count = 0
    while count < n:
        phi = rng.uniform(0.0, 2 * np.pi, 2 * (n - count) + 8)
        keep = rng.random(phi.shape[0]) * (big_r + small_r) < big_r + small_r * np.cos(phi)
        phi = phi[keep][: n - count]
        phis.append(phi)
        count += phi.shape[0]
    phi = np.concatenate(phis)
    theta = rng.uniform(0.0, 2 * np.pi, n)
    ring = big_r + small_r * np.cos(phi)
    return np.c_[ring * np.cos(theta), ring * np.sin(theta), small_r * np.sin(phi)]


_SAMPLERS = {
    PrimitiveKind.CUBOID: _sample_cuboid,
    PrimitiveKind.CYLINDER: _sample_cylinder,
    PrimitiveKind.SPHERE: _sample_sphere,
    PrimitiveKind.CONE: _sample_cone,
    PrimitiveKind.TORUS: _sample_torus,
    PrimitiveKind.PYRAMID: _sample_pyramid,
}


def sample_primitive(spec: PrimitiveSpec, rng: np.random.Generator) -> np.ndarray:
    """Sample spec.point_budget points uniformly by area on the primitive's surface.

    Args:
        spec (PrimitiveSpec): The posed primitive.
        rng (np.random.Generator): Seeded generator.

    Returns:
        np.ndarray: [point_budget x 3] posed surface points in meters.
    """
    local = _SAMPLERS[spec.kind](spec.size, int(spec.point_budget), rng)
    if spec.yaw != 0.0:
        local = local @ yaw_matrix(spec.yaw).T
    return local + np.asarray(spec.translation)
