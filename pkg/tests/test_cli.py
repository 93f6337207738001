#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

import glob
import os
import tempfile
import unittest

import numpy as np
import pandas as pd
from primseg.cli.main import load_config, main, parse_arguments
from primseg.config import Config

from .common import MICRO_CONFIG


class CliTestCase(unittest.TestCase):
    def setUp(self):
        self.tmpdir = tempfile.TemporaryDirectory()
        self.out = os.path.join(self.tmpdir.name, "runs")
        self.config_path = os.path.join(self.tmpdir.name, "micro.ini")
        with open(self.config_path, "w") as f:
            Config(config_dict=MICRO_CONFIG).write(f)

    def tearDown(self):
        self.tmpdir.cleanup()

    def _run_dir(self, command):
        (run_dir,) = glob.glob(os.path.join(self.out, f"{command}_*"))
        return run_dir

    def test_flags_override_file(self):
        args = parse_arguments(
            ["train", "-c", self.config_path, "--seed", "3", "--set", "train.epochs=5"]
        )
        config = load_config(args)
        self.assertEqual(config.getint("common", "seed"), 3)
        self.assertEqual(config.getint("train", "epochs"), 5)
        self.assertEqual(config.getint("model", "feature_dim"), 8)
        # schema defaults fill in the rest
        self.assertEqual(config.getfloat("train", "lr"), 1e-3)

    def test_gradcheck(self):
        argv = ["gradcheck", "--out", self.out, "--set", "model.feature_dim=8"]
        self.assertEqual(main(argv), 0)
        run_dir = self._run_dir("gradcheck")
        table = pd.read_json(os.path.join(run_dir, "gradcheck.jsonl"), lines=True)
        self.assertTrue(table["passed"].all())
        self.assertTrue(os.path.exists(os.path.join(run_dir, "config.ini")))
        self.assertTrue(os.path.exists(os.path.join(run_dir, "gradcheck.txt")))
        self.assertTrue(os.path.exists(os.path.join(run_dir, "primseg.log")))

    def test_gen_train_eval(self):
        common = ["-c", self.config_path, "--out", self.out]
        self.assertEqual(main(["gen"] + common), 0)
        gen_dir = self._run_dir("gen")
        for name in ("taxonomy.json", "split.json", "embeddings.txt", "train_00000.scene"):
            self.assertTrue(os.path.exists(os.path.join(gen_dir, name)), name)

        self.assertEqual(main(["train", "--scenes", gen_dir] + common), 0)
        train_dir = self._run_dir("train")
        for name in ("checkpoint.pt", "training_log.csv", "steps.csv", "metrics.txt"):
            self.assertTrue(os.path.exists(os.path.join(train_dir, name)), name)
        trained = pd.read_json(os.path.join(train_dir, "metrics.jsonl"), lines=True)

        checkpoint = os.path.join(train_dir, "checkpoint.pt")
        argv = ["eval", "--checkpoint", checkpoint, "--scenes", gen_dir] + common
        self.assertEqual(main(argv), 0)
        evaluated = pd.read_json(
            os.path.join(self._run_dir("eval"), "metrics.jsonl"), lines=True
        )
        columns = ["miou_seen", "miou_unseen", "hiou", "overall_accuracy"]
        np.testing.assert_array_equal(evaluated[columns].values, trained[columns].values)

        per_class = pd.read_json(os.path.join(train_dir, "per_class.jsonl"), lines=True)
        self.assertEqual(len(per_class), 10)

    def test_ablate(self):
        argv = [
            "ablate",
            "-c",
            self.config_path,
            "--out",
            self.out,
            "--set",
            "ablation.cells=[base, gp6+mk2+u]",
            "--set",
            "train.epochs=1",
        ]
        self.assertEqual(main(argv), 0)
        run_dir = self._run_dir("ablate")
        summary = pd.read_json(os.path.join(run_dir, "ablation_summary.jsonl"), lines=True)
        self.assertEqual(list(summary["cell"]), ["base", "gp6+mk2+u"])
        self.assertTrue(os.path.exists(os.path.join(run_dir, "ablation_runs.txt")))

    def test_unknown_key_fails(self):
        argv = ["train", "--out", self.out, "--set", "model.lamda=3"]
        self.assertEqual(main(argv), 1)
        self.assertEqual(glob.glob(os.path.join(self.out, "train_*")), [])

    def test_eval_needs_checkpoint(self):
        self.assertEqual(main(["eval", "-c", self.config_path, "--out", self.out]), 1)

    def test_missing_config_file(self):
        missing = os.path.join(self.tmpdir.name, "nope.ini")
        self.assertEqual(main(["gen", "-c", missing, "--out", self.out]), 1)


if __name__ == "__main__":
    unittest.main()
