#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

import os
import tempfile
import unittest

import numpy as np
import numpy.testing as npt
from primseg.exceptions import SceneFormatError
from primseg.scenegen.io import (
    read_scene,
    read_scene_dir,
    read_split,
    write_scene,
    write_scene_dir,
    write_split,
)
from primseg.scenegen.scene import generate_scenes, SceneConfig, UNLABELED
from primseg.scenegen.taxonomy import default_taxonomy

from ..common import random_scene

HEADER = (
    "# primseg scene\nformat_version 1\npoint_count {n}\nclass_count 3\nx y z label object_id\n"
)


class SceneFileTestCase(unittest.TestCase):
    def setUp(self):
        self.tmpdir = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmpdir.name, "a.scene")

    def tearDown(self):
        self.tmpdir.cleanup()

    def _write(self, text):
        with open(self.path, "w") as f:
            f.write(text)

    def test_exact_roundtrip(self):
        scene = random_scene(np.random.default_rng(0), n_points=30)
        scene.points *= np.pi
        scene.labels[:5] = UNLABELED
        write_scene(scene, self.path)
        back = read_scene(self.path)
        self.assertEqual(back, scene)
        self.assertEqual(back.points.dtype, np.float64)

    def test_hard_doubles_roundtrip(self):
        scene = random_scene(np.random.default_rng(1), n_points=4)
        scene.points[:] = [
            [0.1 + 0.2, 1.0 / 3.0, 5e-324],
            [-1.7976931348623157e308, 2.2250738585072014e-308, 9007199254740993.0],
            [np.nextafter(1.0, 2.0), 0.5, 123456789.12345679],
            [1e-300, np.pi * 1e22, -np.e],
        ]
        write_scene(scene, self.path)
        back = read_scene(self.path)
        npt.assert_array_equal(back.points.view(np.int64), scene.points.view(np.int64))

    def test_missing_field(self):
        self._write(HEADER.format(n=2) + "0 0 0 0\n0 0 0 0 0\n")
        with self.assertRaisesRegex(SceneFormatError, ":6: missing or non-numeric object_id"):
            read_scene(self.path)

    def test_generated_dir_roundtrip(self):
        templates, _ = default_taxonomy()
        cfg = SceneConfig(min_objects=2, max_objects=2, floor_extent=6.0, min_separation=1.5)
        scenes = generate_scenes(templates, cfg, 0, "train", 2)
        write_scene_dir(scenes, self.tmpdir.name, "train")
        self.assertEqual(read_scene_dir(self.tmpdir.name, "train"), scenes)
        with self.assertRaises(FileNotFoundError):
            read_scene_dir(self.tmpdir.name, "test")

    def test_missing_file(self):
        with self.assertRaises(FileNotFoundError):
            read_scene(os.path.join(self.tmpdir.name, "nope.scene"))

    def test_bad_magic(self):
        self._write("hello\n" + HEADER.format(n=0)[16:])
        with self.assertRaisesRegex(SceneFormatError, ":1:"):
            read_scene(self.path)

    def test_bad_version(self):
        header = HEADER.format(n=1).replace("format_version 1", "format_version 9")
        self._write(header + "0 0 0 0 0\n")
        with self.assertRaisesRegex(SceneFormatError, ":2: format_version 9"):
            read_scene(self.path)

    def test_bad_count_header(self):
        self._write(HEADER.format(n="many") + "0 0 0 0 0\n")
        with self.assertRaisesRegex(SceneFormatError, ":3:"):
            read_scene(self.path)

    def test_non_numeric_field_names_line(self):
        self._write(HEADER.format(n=3) + "0 0 0 0 0\n0 0 0 0 0\n0 zero 0 0 0\n")
        with self.assertRaisesRegex(SceneFormatError, ":8: .*y 'zero'"):
            read_scene(self.path)

    def test_fractional_label(self):
        self._write(HEADER.format(n=2) + "0 0 0 0 0\n0 0 0 1.5 0\n")
        with self.assertRaisesRegex(SceneFormatError, ":7: label"):
            read_scene(self.path)

    def test_truncated(self):
        self._write(HEADER.format(n=3) + "0 0 0 0 0\n0 0 0 1 0\n")
        with self.assertRaisesRegex(SceneFormatError, "3 points but found 2"):
            read_scene(self.path)

    def test_label_out_of_range(self):
        self._write(HEADER.format(n=2) + "0 0 0 0 0\n0 0 0 3 0\n")
        with self.assertRaisesRegex(SceneFormatError, "row 1"):
            read_scene(self.path)


class SplitFileTestCase(unittest.TestCase):
    def test_roundtrip(self):
        templates, split = default_taxonomy()
        names = [t.name for t in templates]
        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, "split.json")
            write_split(split, names, path)
            back, back_names = read_split(path)
        self.assertEqual(back, split)
        self.assertEqual(back_names, names)


if __name__ == "__main__":
    unittest.main()
