#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from primseg.exceptions import ConfigurationError
from primseg.scenegen.primitives import PRIMITIVE_KINDS, PrimitiveKind, PrimitiveSpec


@dataclass(frozen=True)
class TemplatePart:
    """A primitive placed relative to its object's origin, with jitter ranges.

    size_jitter is a relative half-range (0.1 means each size is scaled by a
    factor drawn from [0.9, 1.1]); offset_jitter is an absolute half-range in
    meters applied to each translation axis.
    """

    primitive: PrimitiveSpec
    size_jitter: float = 0.0
    offset_jitter: float = 0.0

    def __post_init__(self):
        if not 0 <= self.size_jitter < 1:
            raise ConfigurationError(
                f"size_jitter must lie in [0, 1), got {self.size_jitter}"
            )
        if self.offset_jitter < 0:
            raise ConfigurationError(
                f"offset_jitter must be >= 0, got {self.offset_jitter}"
            )

    def instantiate(self, rng: np.random.Generator) -> PrimitiveSpec:
        spec = self.primitive
        size = np.asarray(spec.size)
        if self.size_jitter > 0:
            size = size * rng.uniform(1 - self.size_jitter, 1 + self.size_jitter, size.shape)
        translation = np.asarray(spec.translation)
        if self.offset_jitter > 0:
            translation = translation + rng.uniform(
                -self.offset_jitter, self.offset_jitter, 3
            )
        return PrimitiveSpec(
            kind=spec.kind,
            size=tuple(size),
            translation=tuple(translation),
            yaw=spec.yaw,
            point_budget=spec.point_budget,
        )

    def to_dict(self) -> Dict[str, Any]:
        d = self.primitive.to_dict()
        d["size_jitter"] = self.size_jitter
        d["offset_jitter"] = self.offset_jitter
        return d

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> TemplatePart:
        return cls(
            primitive=PrimitiveSpec.from_dict(d),
            size_jitter=float(d.get("size_jitter", 0.0)),
            offset_jitter=float(d.get("offset_jitter", 0.0)),
        )


@dataclass(frozen=True)
class CategoryTemplate:
    """An object category built from primitives.

    The mixture is the fraction of the category's points that each primitive
    kind receives, in PRIMITIVE_KINDS order. It is derived from the parts'
    point budgets and cannot be set on its own.
    """

    name: str
    parts: Tuple[TemplatePart, ...]
    mixture: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise ConfigurationError(f"category '{self.name}' has no parts")
        budgets = np.zeros(len(PRIMITIVE_KINDS))
        for part in self.parts:
            budgets[PRIMITIVE_KINDS.index(part.primitive.kind)] += part.primitive.point_budget
        object.__setattr__(self, "mixture", budgets / budgets.sum())

    @property
    def point_budget(self) -> int:
        return sum(part.primitive.point_budget for part in self.parts)

    def instantiate(self, rng: np.random.Generator) -> List[PrimitiveSpec]:
        return [part.instantiate(rng) for part in self.parts]

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "parts": [p.to_dict() for p in self.parts]}

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> CategoryTemplate:
        if "name" not in d or "parts" not in d:
            raise ConfigurationError(
                f"template entries need 'name' and 'parts', got keys {sorted(d)}"
            )
        return cls(name=d["name"], parts=tuple(TemplatePart.from_dict(p) for p in d["parts"]))


@dataclass(frozen=True)
class SplitSpec:
    """Disjoint seen/unseen partition of class ids 0..class_count-1."""

    seen: FrozenSet[int]
    unseen: FrozenSet[int]

    def __post_init__(self):
        object.__setattr__(self, "seen", frozenset(int(c) for c in self.seen))
        object.__setattr__(self, "unseen", frozenset(int(c) for c in self.unseen))
        overlap = self.seen & self.unseen
        if overlap:
            raise ConfigurationError(
                f"seen and unseen classes overlap on {sorted(overlap)}"
            )

    @property
    def class_count(self) -> int:
        return len(self.seen) + len(self.unseen)

    @property
    def seen_ids(self) -> List[int]:
        return sorted(self.seen)

    @property
    def unseen_ids(self) -> List[int]:
        return sorted(self.unseen)

    def validate(self, class_count: int) -> None:
        """Check that the split covers exactly the classes 0..class_count-1."""
        covered = self.seen | self.unseen
        expected = set(range(class_count))
        if covered != expected:
            raise ConfigurationError(
                f"split covers {sorted(covered)} but scenes have classes {sorted(expected)}"
            )

    @classmethod
    def from_names(
        cls, class_names: Sequence[str], unseen_names: Iterable[str]
    ) -> SplitSpec:
        unseen_names = list(unseen_names)
        missing = [n for n in unseen_names if n not in class_names]
        if missing:
            raise ConfigurationError(
                f"unseen classes {missing} are not in the taxonomy {list(class_names)}"
            )
        unseen = {class_names.index(n) for n in unseen_names}
        seen = set(range(len(class_names))) - unseen
        return cls(seen=frozenset(seen), unseen=frozenset(unseen))

    def to_dict(self, class_names: Optional[Sequence[str]] = None) -> Dict[str, Any]:
        d: Dict[str, Any] = {"seen": self.seen_ids, "unseen": self.unseen_ids}
        if class_names is not None:
            d["seen_names"] = [class_names[c] for c in self.seen_ids]
            d["unseen_names"] = [class_names[c] for c in self.unseen_ids]
        return d


def mixture_overlap(a: CategoryTemplate, b: CategoryTemplate) -> float:
    """Shared primitive mass between two categories, as the mixture dot product."""
    return float(np.dot(a.mixture, b.mixture))


def mixture_matrix(templates: Sequence[CategoryTemplate]) -> np.ndarray:
    """C x P matrix of template mixtures, rows in template order."""
    return np.stack([t.mixture for t in templates])


def _part(kind, size, at, budget, size_jitter=0.1, offset_jitter=0.0):
    return TemplatePart(
        PrimitiveSpec(kind=kind, size=size, translation=at, point_budget=budget),
        size_jitter=size_jitter,
        offset_jitter=offset_jitter,
    )


def _legs(kind, size, xy, z, budget):
    return [_part(kind, size, (x, y, z), budget) for x, y in xy]


def _corners(dx, dy):
    return [(dx, dy), (-dx, dy), (-dx, -dy), (dx, -dy)]


CUBOID = PrimitiveKind.CUBOID
CYLINDER = PrimitiveKind.CYLINDER
SPHERE = PrimitiveKind.SPHERE
CONE = PrimitiveKind.CONE
TORUS = PrimitiveKind.TORUS
PYRAMID = PrimitiveKind.PYRAMID

DEFAULT_UNSEEN = ("sofa", "desk")

# sofa pairs with chair, desk pairs with table
DEFAULT_ANALOG_PAIRS = (("chair", "sofa"), ("table", "desk"))


def default_taxonomy() -> Tuple[List[CategoryTemplate], SplitSpec]:
    """Ten furniture-like categories over the six primitive kinds.

    Sofa and desk are held out. Both are built from the same cuboid and
    cylinder parts as their seen analogs (chair and table), so each unseen
    class shares more than half its mixture mass with a seen class.

    Returns:
        Tuple[List[CategoryTemplate], SplitSpec]: Templates in class-id order
            and the recommended split.
    """
    templates = [
        CategoryTemplate(
            "chair",
            [
                _part(CUBOID, (0.5, 0.5, 0.08), (0.0, 0.0, 0.45), 140),
                _part(CUBOID, (0.5, 0.06, 0.5), (0.0, -0.22, 0.74), 100),
            ]
            + _legs(CYLINDER, (0.025, 0.41), _corners(0.22, 0.22), 0.205, 40),
        ),
        CategoryTemplate(
            "table",
            [_part(CUBOID, (1.2, 0.8, 0.05), (0.0, 0.0, 0.725), 220)]
            + _legs(CYLINDER, (0.03, 0.7), _corners(0.55, 0.35), 0.35, 45),
        ),
        CategoryTemplate(
            "lamp",
            [
                _part(CYLINDER, (0.15, 0.03), (0.0, 0.0, 0.015), 60),
                _part(CYLINDER, (0.015, 1.2), (0.0, 0.0, 0.63), 80),
                _part(CONE, (0.25, 0.3), (0.0, 0.0, 1.35), 160),
            ],
        ),
        CategoryTemplate(
            "globe",
            [
                _part(SPHERE, (0.3,), (0.0, 0.0, 0.8), 240),
                _part(CYLINDER, (0.03, 0.5), (0.0, 0.0, 0.25), 60),
            ],
        ),
        CategoryTemplate(
            "cabinet",
            [_part(CUBOID, (0.8, 0.5, 1.2), (0.0, 0.0, 0.6), 300)]
            + _legs(CYLINDER, (0.01, 0.15), [(0.1, 0.26), (-0.1, 0.26)], 0.7, 20),
        ),
        CategoryTemplate(
            "trash_can",
            [_part(CYLINDER, (0.2, 0.6), (0.0, 0.0, 0.3), 260)],
        ),
        CategoryTemplate(
            "christmas_tree",
            [
                _part(CYLINDER, (0.06, 0.3), (0.0, 0.0, 0.15), 60),
                _part(PYRAMID, (0.9, 1.5), (0.0, 0.0, 1.05), 240),
            ],
        ),
        CategoryTemplate(
            "ring_toss",
            [
                _part(TORUS, (0.3, 0.05), (0.0, 0.0, 0.4), 240, offset_jitter=0.1),
                _part(CYLINDER, (0.03, 0.8), (0.0, 0.0, 0.4), 60),
            ],
        ),
        CategoryTemplate(
            "sofa",
            [
                _part(CUBOID, (1.8, 0.8, 0.4), (0.0, 0.0, 0.28), 220),
                _part(CUBOID, (1.8, 0.2, 0.5), (0.0, -0.3, 0.73), 140),
                _part(CUBOID, (0.2, 0.8, 0.25), (0.8, 0.0, 0.605), 60),
                _part(CUBOID, (0.2, 0.8, 0.25), (-0.8, 0.0, 0.605), 60),
            ]
            + _legs(CYLINDER, (0.04, 0.08), _corners(0.8, 0.3), 0.04, 20),
        ),
        CategoryTemplate(
            "desk",
            [
                _part(CUBOID, (1.4, 0.7, 0.04), (0.0, 0.0, 0.74), 200),
                _part(CUBOID, (0.04, 0.7, 0.72), (-0.68, 0.0, 0.36), 80),
                _part(CUBOID, (1.3, 0.03, 0.4), (0.0, 0.33, 0.5), 80),
            ]
            + _legs(CYLINDER, (0.03, 0.72), [(0.65, 0.3), (0.65, -0.3)], 0.36, 40),
        ),
    ]
    names = [t.name for t in templates]
    return templates, SplitSpec.from_names(names, DEFAULT_UNSEEN)


def load_taxonomy(path: str) -> Tuple[List[CategoryTemplate], Optional[List[str]]]:
    """Read a JSON taxonomy file.

    The file holds {"templates": [{"name": ..., "parts": [...]}, ...],
    "unseen": [names]} where each part has kind, size, translation, yaw,
    point_budget, size_jitter and offset_jitter. "unseen" is optional.
    """
    with open(path, "r") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"{path} is not valid JSON: {e}") from e
    if "templates" not in doc:
        raise ConfigurationError(f"{path} has no 'templates' list")
    templates = [CategoryTemplate.from_dict(t) for t in doc["templates"]]
    names = [t.name for t in templates]
    if len(set(names)) != len(names):
        raise ConfigurationError(f"{path} repeats category names: {names}")
    return templates, doc.get("unseen")


def write_taxonomy(
    templates: Sequence[CategoryTemplate], split: SplitSpec, path: str
) -> None:
    names = [t.name for t in templates]
    doc = {
        "templates": [t.to_dict() for t in templates],
        "unseen": [names[c] for c in split.unseen_ids],
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=2)
