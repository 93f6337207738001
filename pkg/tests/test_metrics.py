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
import pandas as pd
from parameterized import parameterized
from primseg.exceptions import ConfigurationError
from primseg.metrics import compute_metrics, hiou, write_table

from .common import last_unseen_split


class HIoUTestCase(unittest.TestCase):
    @parameterized.expand([(60.4, 20.6, 30.7), (57.9, 34.1, 42.9)])
    def test_reported_values(self, seen, unseen, expected):
        self.assertAlmostEqual(hiou(seen, unseen), expected, delta=0.05)

    def test_identities(self):
        self.assertEqual(hiou(0.0, 0.0), 0.0)
        self.assertEqual(hiou(0.5, 0.0), 0.0)
        self.assertAlmostEqual(hiou(0.4, 0.4), 0.4)
        self.assertLessEqual(hiou(0.9, 0.1), (0.9 + 0.1) / 2)


class ComputeMetricsTestCase(unittest.TestCase):
    def setUp(self):
        self.split = last_unseen_split(class_count=4, n_unseen=1)

    def test_perfect(self):
        gt = np.array([0, 1, 2, 3, 3, 1])
        report = compute_metrics(gt, gt, self.split)
        npt.assert_array_equal(report.per_class_iou, np.ones(4))
        self.assertEqual(report.miou_seen, 1.0)
        self.assertEqual(report.miou_unseen, 1.0)
        self.assertEqual(report.hiou, 1.0)
        self.assertEqual(report.overall_accuracy, 1.0)
        self.assertEqual(report.absent_classes, [])

    def test_hand_computed(self):
        gt = np.array([0, 0, 1, 1, 2, 3, 3, 3])
        pred = np.array([0, 1, 1, 1, 3, 3, 3, 0])
        report = compute_metrics(pred, gt, self.split)
        # class 0: tp 1, fp 1, fn 1; class 1: tp 2, fp 1; class 2: tp 0; class 3: tp 2, fp 1, fn 1
        npt.assert_allclose(report.per_class_iou, [1 / 3, 2 / 3, 0.0, 2 / 4])
        self.assertAlmostEqual(report.miou_seen, (1 / 3 + 2 / 3 + 0.0) / 3)
        self.assertAlmostEqual(report.miou_unseen, 0.5)
        self.assertAlmostEqual(report.miou_all, (1 / 3 + 2 / 3 + 0.0 + 0.5) / 4)
        self.assertAlmostEqual(report.hiou, hiou(1 / 3, 0.5))
        self.assertAlmostEqual(report.overall_accuracy, 5 / 8)
        self.assertEqual(report.confusion[3, 0], 1)
        self.assertEqual(report.confusion.sum(), 8)

    def test_absent_class_left_out(self):
        gt = np.array([0, 1, 3, 3])
        pred = np.array([0, 1, 3, 3])
        report = compute_metrics(pred, gt, self.split)
        self.assertEqual(report.absent_classes, [2])
        self.assertEqual(report.per_class_iou[2], 0.0)
        self.assertEqual(report.miou_seen, 1.0)

    def test_all_unseen_absent(self):
        gt = pred = np.array([0, 1, 2])
        report = compute_metrics(pred, gt, self.split)
        self.assertEqual(report.miou_unseen, 0.0)
        self.assertEqual(report.hiou, 0.0)

    def test_errors(self):
        with self.assertRaises(ConfigurationError):
            compute_metrics(np.zeros(3), np.zeros(4), self.split)
        with self.assertRaisesRegex(ConfigurationError, "UNLABELED"):
            compute_metrics(np.zeros(2), np.array([0, -1]), self.split)
        with self.assertRaisesRegex(ConfigurationError, "prediction"):
            compute_metrics(np.array([0, 4]), np.array([0, 1]), self.split)

    def test_record_and_table(self):
        gt = np.array([0, 1, 3, 3])
        names = ["a", "b", "c", "d"]
        report = compute_metrics(gt, gt, self.split, class_names=names)
        record = report.to_record()
        self.assertEqual(record["absent_classes"], ["c"])
        self.assertEqual(record["per_class_iou"]["d"], 1.0)
        json.dumps(record)

        table = report.per_class_table(self.split)
        self.assertEqual(list(table["class"]), names)
        self.assertEqual(list(table["split"]), ["seen", "seen", "seen", "unseen"])
        self.assertEqual(list(table["gt_points"]), [1, 1, 0, 2])


class WriteTableTestCase(unittest.TestCase):
    def test_writes_both_files(self):
        df = pd.DataFrame({"cell": ["base", "base+u"], "hiou": [0.123456, 0.5]})
        with tempfile.TemporaryDirectory() as d:
            jsonl, txt = write_table(df, os.path.join(d, "summary"))
            back = pd.read_json(jsonl, orient="records", lines=True)
            with open(txt) as f:
                text = f.read()
        pd.testing.assert_frame_equal(back, df)
        self.assertIn("0.1235", text)
        self.assertIn("base+u", text)


if __name__ == "__main__":
    unittest.main()
