#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

import os
import tempfile
import unittest

import torch
from primseg.exceptions import CheckpointError
from primseg.numerics.checkpoint import FORMAT_VERSION, read_tensors, write_tensors


class CheckpointTestCase(unittest.TestCase):
    def setUp(self):
        self.tmpdir = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmpdir.name, "ckpt.pt")
        gen = torch.Generator().manual_seed(3)
        self.tensors = {
            "backbone.w1": torch.randn(4, 3, generator=gen, dtype=torch.float64),
            "bank.prototypes": torch.randn(6, 5, generator=gen, dtype=torch.float64),
        }
        self.metadata = {"class_names": ["a", "b"], "lambda": 4.0, "seed": 11}

    def tearDown(self):
        self.tmpdir.cleanup()

    def test_roundtrip_is_exact(self):
        write_tensors(self.path, self.tensors, self.metadata)
        tensors, metadata = read_tensors(self.path)
        self.assertEqual(set(tensors), set(self.tensors))
        for name, t in self.tensors.items():
            self.assertTrue(torch.equal(tensors[name], t))
            self.assertEqual(tensors[name].dtype, torch.float64)
        self.assertEqual(metadata, self.metadata)

    def test_truncated_file(self):
        write_tensors(self.path, self.tensors, self.metadata)
        size = os.path.getsize(self.path)
        with open(self.path, "rb") as f:
            head = f.read(size // 2)
        with open(self.path, "wb") as f:
            f.write(head)
        with self.assertRaises(CheckpointError):
            read_tensors(self.path)

    def test_missing_file(self):
        with self.assertRaises(FileNotFoundError):
            read_tensors(os.path.join(self.tmpdir.name, "nope.pt"))

    def test_version_mismatch(self):
        torch.save(
            {"format_version": FORMAT_VERSION + 1, "shapes": {}, "tensors": {}, "metadata": {}},
            self.path,
        )
        with self.assertRaisesRegex(CheckpointError, "format version"):
            read_tensors(self.path)

    def test_not_a_checkpoint(self):
        torch.save({"weights": torch.zeros(2)}, self.path)
        with self.assertRaises(CheckpointError):
            read_tensors(self.path)

    def test_shape_header_mismatch(self):
        torch.save(
            {
                "format_version": FORMAT_VERSION,
                "shapes": {"w": [2, 3]},
                "tensors": {"w": torch.zeros(3, 2)},
                "metadata": {},
            },
            self.path,
        )
        with self.assertRaisesRegex(CheckpointError, "tensor w"):
            read_tensors(self.path)

    def test_header_lists_other_tensors(self):
        torch.save(
            {
                "format_version": FORMAT_VERSION,
                "shapes": {"w": [2]},
                "tensors": {"v": torch.zeros(2)},
                "metadata": {},
            },
            self.path,
        )
        with self.assertRaises(CheckpointError):
            read_tensors(self.path)


if __name__ == "__main__":
    unittest.main()
