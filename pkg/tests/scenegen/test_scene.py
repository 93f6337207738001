#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

import unittest

import numpy as np
import numpy.testing as npt
from primseg.exceptions import ConfigurationError, GenerationError, SceneFormatError
from primseg.scenegen.scene import (
    AugmentStrength,
    augment_scene,
    generate_scene,
    generate_scenes,
    mask_unseen_labels,
    Scene,
    SceneConfig,
    split_point_counts,
    UNLABELED,
    unseen_region_mask,
)
from primseg.scenegen.taxonomy import default_taxonomy, SplitSpec

from ..common import random_scene

SMALL = SceneConfig(min_objects=2, max_objects=3, floor_extent=6.0, min_separation=1.5)


class GenerateSceneTestCase(unittest.TestCase):
    def setUp(self):
        self.templates, self.split = default_taxonomy()

    def test_labels_and_objects(self):
        scene = generate_scene(self.templates, SMALL, np.random.default_rng(0))
        scene.validate()
        self.assertEqual(scene.class_count, 10)
        n_objects = len(np.unique(scene.object_ids))
        self.assertTrue(2 <= n_objects <= 3)
        for obj in np.unique(scene.object_ids):
            in_obj = scene.object_ids == obj
            # one class per object, and every point of the template is there
            labels = np.unique(scene.labels[in_obj])
            self.assertEqual(len(labels), 1)
            self.assertEqual(in_obj.sum(), self.templates[labels[0]].point_budget)

    def test_objects_are_separated(self):
        scene = generate_scene(self.templates, SMALL, np.random.default_rng(1))
        centers = []
        for obj in np.unique(scene.object_ids):
            pts = scene.points[scene.object_ids == obj]
            centers.append(pts[:, :2].mean(axis=0))
        # part offsets move the centroid away from the placement point by far less than 1.5 m
        for i in range(len(centers)):
            for j in range(i + 1, len(centers)):
                self.assertGreater(np.linalg.norm(centers[i] - centers[j]), 0.5)

    def test_deterministic(self):
        a = generate_scenes(self.templates, SMALL, 3, "train", 3)
        b = generate_scenes(self.templates, SMALL, 3, "train", 3)
        self.assertEqual(a, b)
        c = generate_scenes(self.templates, SMALL, 3, "test", 3)
        self.assertNotEqual(a[0], c[0])
        d = generate_scenes(self.templates, SMALL, 4, "train", 3)
        self.assertNotEqual(a[0], d[0])

    def test_prefix_stable(self):
        # scene i depends only on (seed, split, i)
        a = generate_scenes(self.templates, SMALL, 3, "train", 2)
        b = generate_scenes(self.templates, SMALL, 3, "train", 4)
        self.assertEqual(a, b[:2])

    def test_serial_equals_parallel(self):
        serial = generate_scenes(self.templates, SMALL, 5, "train", 3, nproc=1)
        parallel = generate_scenes(self.templates, SMALL, 5, "train", 3, nproc=2)
        self.assertEqual(serial, parallel)

    def test_placement_gives_up(self):
        crowded = SceneConfig(
            min_objects=5, max_objects=5, floor_extent=1.0, min_separation=5.0, max_retries=20
        )
        with self.assertRaisesRegex(GenerationError, "could not place"):
            generate_scene(self.templates, crowded, np.random.default_rng(0))

    def test_bad_config(self):
        with self.assertRaises(ConfigurationError):
            SceneConfig(min_objects=4, max_objects=2)
        with self.assertRaises(ConfigurationError):
            SceneConfig(min_objects=0)
        with self.assertRaises(ConfigurationError):
            SceneConfig(floor_extent=0.0)
        with self.assertRaises(ConfigurationError):
            generate_scene([], SMALL, np.random.default_rng(0))


class SceneTestCase(unittest.TestCase):
    def setUp(self):
        self.scene = random_scene(np.random.default_rng(0), n_points=50, class_count=4)
        self.split = SplitSpec(seen=frozenset({0, 1}), unseen=frozenset({2, 3}))

    def test_validate(self):
        self.scene.validate()
        bad = self.scene.copy()
        bad.points[7, 1] = np.nan
        with self.assertRaisesRegex(SceneFormatError, "row 7"):
            bad.validate()
        bad = self.scene.copy()
        bad.labels[3] = 4
        with self.assertRaisesRegex(SceneFormatError, "row 3"):
            bad.validate()
        with self.assertRaises(SceneFormatError):
            Scene(np.zeros((0, 3)), [], [], 2).validate()
        with self.assertRaises(SceneFormatError):
            Scene(np.zeros((4, 2)), [0] * 4, [0] * 4, 2).validate()
        with self.assertRaises(SceneFormatError):
            Scene(np.zeros((4, 3)), [0] * 3, [0] * 4, 2).validate()

    def test_unlabeled_is_valid(self):
        s = self.scene.copy()
        s.labels[:] = UNLABELED
        s.validate()

    def test_mask_unseen_labels(self):
        original = self.scene.copy()
        m = mask_unseen_labels(self.scene, self.split)
        unseen = np.isin(original.labels, [2, 3])
        self.assertTrue((m.labels[unseen] == UNLABELED).all())
        npt.assert_array_equal(m.labels[~unseen], original.labels[~unseen])
        npt.assert_array_equal(m.points, original.points)
        npt.assert_array_equal(m.object_ids, original.object_ids)
        # input untouched
        self.assertEqual(self.scene, original)
        # masking twice changes nothing
        self.assertEqual(mask_unseen_labels(m, self.split), m)

    def test_unseen_region_mask(self):
        npt.assert_array_equal(
            unseen_region_mask(self.scene, self.split), np.isin(self.scene.labels, [2, 3])
        )

    def test_split_must_cover_labels(self):
        narrow = SplitSpec(seen=frozenset({0}), unseen=frozenset({1}))
        with self.assertRaises(ConfigurationError):
            mask_unseen_labels(self.scene, narrow)

    def test_split_point_counts(self):
        seen, unseen = split_point_counts([self.scene, self.scene], self.split)
        n_unseen = int(np.isin(self.scene.labels, [2, 3]).sum())
        self.assertEqual(unseen, 2 * n_unseen)
        self.assertEqual(seen, 2 * (50 - n_unseen))


class AugmentTestCase(unittest.TestCase):
    def setUp(self):
        self.scene = random_scene(np.random.default_rng(1), n_points=40)

    def test_identity(self):
        out = augment_scene(self.scene, AugmentStrength(), np.random.default_rng(0))
        self.assertTrue(np.array_equal(out.points, self.scene.points))
        self.assertIsNot(out.points, self.scene.points)

    def test_rotation_keeps_z_and_radius(self):
        strength = AugmentStrength(rotation=(0.5, 0.5))
        out = augment_scene(self.scene, strength, np.random.default_rng(0))
        npt.assert_allclose(out.points[:, 2], self.scene.points[:, 2])
        npt.assert_allclose(
            np.linalg.norm(out.points[:, :2], axis=1),
            np.linalg.norm(self.scene.points[:, :2], axis=1),
        )

    def test_scale(self):
        out = augment_scene(
            self.scene, AugmentStrength(scale=(2.0, 2.0)), np.random.default_rng(0)
        )
        npt.assert_allclose(out.points, 2.0 * self.scene.points)

    def test_rows_correspond(self):
        strength = AugmentStrength(rotation=(-np.pi, np.pi), jitter_sigma=0.01, scale=(0.8, 1.2))
        out = augment_scene(self.scene, strength, np.random.default_rng(0))
        npt.assert_array_equal(out.labels, self.scene.labels)
        npt.assert_array_equal(out.object_ids, self.scene.object_ids)
        self.assertEqual(out.points.shape, self.scene.points.shape)
        again = augment_scene(self.scene, strength, np.random.default_rng(0))
        self.assertEqual(out, again)

    def test_bad_strength(self):
        with self.assertRaises(ConfigurationError):
            AugmentStrength(rotation=(1.0, 0.0))
        with self.assertRaises(ConfigurationError):
            AugmentStrength(scale=(0.0, 1.0))
        with self.assertRaises(ConfigurationError):
            AugmentStrength(jitter_sigma=-1.0)


if __name__ == "__main__":
    unittest.main()
