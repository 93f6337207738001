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
import numpy.testing as npt
from primseg.exceptions import ConfigurationError
from primseg.scenegen.primitives import PRIMITIVE_KINDS, PrimitiveKind, PrimitiveSpec
from primseg.scenegen.taxonomy import (
    CategoryTemplate,
    DEFAULT_ANALOG_PAIRS,
    default_taxonomy,
    load_taxonomy,
    mixture_matrix,
    mixture_overlap,
    SplitSpec,
    TemplatePart,
    write_taxonomy,
)


class DefaultTaxonomyTestCase(unittest.TestCase):
    def setUp(self):
        self.templates, self.split = default_taxonomy()
        self.names = [t.name for t in self.templates]

    def test_shape(self):
        self.assertEqual(len(self.templates), 10)
        self.assertEqual(len(set(self.names)), 10)
        self.assertEqual(self.split.class_count, 10)
        self.assertEqual(
            [self.names[c] for c in self.split.unseen_ids],
            sorted(["sofa", "desk"], key=self.names.index),
        )
        self.split.validate(10)

    def test_every_kind_is_used(self):
        used = mixture_matrix(self.templates).sum(axis=0)
        self.assertTrue((used > 0).all())

    def test_mixtures_are_distributions(self):
        m = mixture_matrix(self.templates)
        self.assertEqual(m.shape, (10, len(PRIMITIVE_KINDS)))
        npt.assert_allclose(m.sum(axis=1), 1.0)
        self.assertTrue((m >= 0).all())

    def test_unseen_share_mass_with_seen_analog(self):
        by_name = dict(zip(self.names, self.templates))
        for seen_name, unseen_name in DEFAULT_ANALOG_PAIRS:
            self.assertIn(self.names.index(seen_name), self.split.seen)
            self.assertIn(self.names.index(unseen_name), self.split.unseen)
            self.assertGreaterEqual(
                mixture_overlap(by_name[seen_name], by_name[unseen_name]), 0.5
            )

    def test_instantiation_jitters_within_range(self):
        rng = np.random.default_rng(0)
        chair = self.templates[0]
        specs = chair.instantiate(rng)
        self.assertEqual(len(specs), len(chair.parts))
        for part, spec in zip(chair.parts, specs):
            ratio = np.array(spec.size) / np.array(part.primitive.size)
            self.assertTrue(((ratio >= 0.9) & (ratio <= 1.1)).all())
            self.assertEqual(spec.point_budget, part.primitive.point_budget)


class TemplateTestCase(unittest.TestCase):
    def test_mixture_follows_budgets(self):
        t = CategoryTemplate(
            "thing",
            [
                TemplatePart(PrimitiveSpec(PrimitiveKind.CUBOID, (1, 1, 1), point_budget=30)),
                TemplatePart(PrimitiveSpec(PrimitiveKind.SPHERE, (1,), point_budget=10)),
            ],
        )
        expected = np.zeros(len(PRIMITIVE_KINDS))
        expected[PRIMITIVE_KINDS.index(PrimitiveKind.CUBOID)] = 0.75
        expected[PRIMITIVE_KINDS.index(PrimitiveKind.SPHERE)] = 0.25
        npt.assert_allclose(t.mixture, expected)
        self.assertEqual(t.point_budget, 40)

    def test_no_parts(self):
        with self.assertRaises(ConfigurationError):
            CategoryTemplate("empty", [])

    def test_bad_jitter(self):
        spec = PrimitiveSpec(PrimitiveKind.SPHERE, (1,))
        with self.assertRaises(ConfigurationError):
            TemplatePart(spec, size_jitter=1.0)
        with self.assertRaises(ConfigurationError):
            TemplatePart(spec, offset_jitter=-0.1)


class SplitTestCase(unittest.TestCase):
    def test_overlap_rejected(self):
        with self.assertRaisesRegex(ConfigurationError, "overlap"):
            SplitSpec(seen=frozenset({0, 1}), unseen=frozenset({1, 2}))

    def test_validate_coverage(self):
        split = SplitSpec(seen=frozenset({0, 1}), unseen=frozenset({2}))
        split.validate(3)
        with self.assertRaises(ConfigurationError):
            split.validate(4)

    def test_from_names(self):
        split = SplitSpec.from_names(["a", "b", "c"], ["c", "a"])
        self.assertEqual(split.unseen_ids, [0, 2])
        self.assertEqual(split.seen_ids, [1])
        with self.assertRaisesRegex(ConfigurationError, "not in the taxonomy"):
            SplitSpec.from_names(["a", "b"], ["z"])

    def test_to_dict_names(self):
        d = SplitSpec.from_names(["a", "b", "c"], ["b"]).to_dict(["a", "b", "c"])
        self.assertEqual(d["unseen_names"], ["b"])
        self.assertEqual(d["seen_names"], ["a", "c"])


class TaxonomyFileTestCase(unittest.TestCase):
    def setUp(self):
        self.tmpdir = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmpdir.name, "taxonomy.json")

    def tearDown(self):
        self.tmpdir.cleanup()

    def test_roundtrip(self):
        templates, split = default_taxonomy()
        write_taxonomy(templates, split, self.path)
        loaded, unseen = load_taxonomy(self.path)
        self.assertEqual(loaded, templates)
        self.assertEqual(sorted(unseen), ["desk", "sofa"])
        npt.assert_array_equal(mixture_matrix(loaded), mixture_matrix(templates))

    def test_shipped_example_loads(self):
        path = os.path.join(os.path.dirname(__file__), "../../configs/taxonomy_example.json")
        templates, unseen = load_taxonomy(path)
        self.assertEqual([t.name for t in templates], ["stool", "shelf", "lamp_post", "bin"])
        self.assertEqual(unseen, ["bin"])

    def test_bad_files(self):
        with open(self.path, "w") as f:
            f.write("{not json")
        with self.assertRaisesRegex(ConfigurationError, "not valid JSON"):
            load_taxonomy(self.path)

        with open(self.path, "w") as f:
            json.dump({"classes": []}, f)
        with self.assertRaisesRegex(ConfigurationError, "templates"):
            load_taxonomy(self.path)

        part = {"kind": "sphere", "size": [1.0], "point_budget": 10}
        with open(self.path, "w") as f:
            json.dump({"templates": [{"name": "a", "parts": [part]}] * 2}, f)
        with self.assertRaisesRegex(ConfigurationError, "repeats"):
            load_taxonomy(self.path)


if __name__ == "__main__":
    unittest.main()
