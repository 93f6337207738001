#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

import json
import os
import tempfile
import unittest

import numpy as np
from primseg.benchmark import SegmentationProblem, taxonomy_from_config
from primseg.benchmark.problem import SPLIT_FILE
from primseg.exceptions import ConfigurationError
from primseg.scenegen.io import write_scene_dir, write_split
from primseg.scenegen.scene import UNLABELED
from primseg.scenegen.taxonomy import default_taxonomy, SplitSpec, write_taxonomy

from ..common import micro_config, random_embeddings


class TaxonomyFromConfigTestCase(unittest.TestCase):
    def setUp(self):
        self.tmpdir = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmpdir.cleanup()

    def test_default(self):
        templates, split = taxonomy_from_config(micro_config())
        self.assertEqual(len(templates), 10)
        self.assertEqual(split, default_taxonomy()[1])

    def test_unseen_override(self):
        templates, split = taxonomy_from_config(micro_config(scenegen={"unseen": "[lamp]"}))
        names = [t.name for t in templates]
        self.assertEqual(split.unseen_ids, [names.index("lamp")])

    def test_file_without_unseen(self):
        templates, split = default_taxonomy()
        path = os.path.join(self.tmpdir.name, "taxonomy.json")
        write_taxonomy(templates, split, path)
        with open(path) as f:
            doc = json.load(f)
        del doc["unseen"]
        with open(path, "w") as f:
            json.dump(doc, f)

        with self.assertRaisesRegex(ConfigurationError, "names no unseen classes"):
            taxonomy_from_config(micro_config(scenegen={"taxonomy_path": path}))
        _, split = taxonomy_from_config(
            micro_config(scenegen={"taxonomy_path": path, "unseen": "[globe]"})
        )
        self.assertEqual(len(split.unseen), 1)

    def test_unknown_unseen_name(self):
        with self.assertRaisesRegex(ConfigurationError, "not in the taxonomy"):
            taxonomy_from_config(micro_config(scenegen={"unseen": "[spaceship]"}))


class SegmentationProblemTestCase(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.config = micro_config()
        cls.problem = SegmentationProblem.from_config(cls.config)

    def test_generated(self):
        self.assertEqual(len(self.problem.train_scenes), 4)
        self.assertEqual(len(self.problem.test_scenes), 2)
        self.assertEqual(self.problem.embeddings.dim, 24)
        self.assertEqual(self.problem.embeddings.class_names, self.problem.class_names)

    def test_masked_train_scenes(self):
        unseen = self.problem.split.unseen_ids
        for raw, masked in zip(self.problem.train_scenes, self.problem.masked_train_scenes):
            self.assertFalse(np.isin(masked.labels, unseen).any())
            np.testing.assert_array_equal(
                masked.labels == UNLABELED, np.isin(raw.labels, unseen)
            )

    def test_metadata(self):
        meta = self.problem.metadata
        total = sum(s.n_points for s in self.problem.train_scenes)
        self.assertEqual(meta["train_seen_points"] + meta["train_unseen_points"], total)
        self.assertEqual(sorted(meta["unseen"]), ["desk", "sofa"])
        self.assertEqual(meta["embedding_source"], "synthetic")

    def test_from_scene_dir(self):
        with tempfile.TemporaryDirectory() as d:
            write_scene_dir(self.problem.train_scenes, d, "train")
            write_scene_dir(self.problem.test_scenes, d, "test")
            write_split(self.problem.split, self.problem.class_names, os.path.join(d, SPLIT_FILE))
            config = micro_config(data={"scene_dir": d})
            loaded = SegmentationProblem.from_config(config)
            self.assertEqual(loaded.train_scenes, self.problem.train_scenes)
            self.assertEqual(loaded.test_scenes, self.problem.test_scenes)

            other = SplitSpec.from_names(self.problem.class_names, ["lamp"])
            write_split(other, self.problem.class_names, os.path.join(d, SPLIT_FILE))
            with self.assertRaisesRegex(ConfigurationError, "does not match"):
                SegmentationProblem.from_config(config)

    def test_embedding_names_must_match(self):
        with self.assertRaisesRegex(ConfigurationError, "do not match"):
            SegmentationProblem(
                self.problem.templates,
                self.problem.split,
                random_embeddings(class_count=10),
                self.problem.train_scenes,
                self.problem.test_scenes,
            )


if __name__ == "__main__":
    unittest.main()
