#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

import os
import tempfile
import unittest

from parameterized import parameterized
from primseg.benchmark import AblationGrid
from primseg.config import Config, DEFAULT_SCHEMA
from primseg.exceptions import ConfigurationError
from primseg.objective import LossConfig, LossVariant
from primseg.trainer import TrainConfig


class ConfigTestCase(unittest.TestCase):
    def test_schema_defaults(self):
        config = Config()
        self.assertEqual(config.getint("model", "n_prototypes"), 128)
        self.assertEqual(config.getint("model", "n_kernels"), 16)
        self.assertEqual(config.getfloat("model", "lambda"), 4.0)
        self.assertEqual(config.getint("semantics", "dim"), 600)
        self.assertEqual(config.getfloat("train", "lr"), 1e-3)
        self.assertEqual(config.get("scenegen", "taxonomy_path"), "")

    def test_explicit_values_beat_defaults(self):
        config = Config(config_dict={"model": {"n_prototypes": 64}})
        self.assertEqual(config.getint("model", "n_prototypes"), 64)
        self.assertEqual(config.getint("model", "n_kernels"), 16)

    def test_missing_section_reads_common(self):
        config = Config(config_str="[common]\nseed = 11\n")
        self.assertEqual(config.getint("not_a_section", "seed"), 11)

    def test_common_values_are_inherited(self):
        config = Config(config_str="[common]\nseed = 5\n[train]\nepochs = 3\n")
        self.assertEqual(config.getint("train", "seed"), 5)

    def test_misspelled_key_suggests_closest(self):
        config = Config(config_str="[model]\nlamda = 2.0\n")
        with self.assertRaises(ConfigurationError) as cm:
            config.validate()
        self.assertIn("lamda", str(cm.exception))
        self.assertIn("did you mean 'lambda'", str(cm.exception))

    def test_misspelled_common_key_is_flagged_once(self):
        config = Config(
            config_str="[common]\nsed = 3\n[model]\nn_kernels = 2\n[train]\nepochs = 1\n"
        )
        with self.assertRaises(ConfigurationError) as cm:
            config.validate()
        message = str(cm.exception)
        self.assertIn("unknown key 'sed' in [common] (did you mean 'seed'?)", message)
        self.assertEqual(message.count("'sed'"), 1)

    def test_misspelled_section_suggests_closest(self):
        config = Config(config_str="[modle]\nn_kernels = 2\n")
        with self.assertRaises(ConfigurationError) as cm:
            config.validate()
        self.assertIn("[model]", str(cm.exception))

    def test_all_problems_listed(self):
        config = Config(config_str="[model]\nlamda = 2\n[loss]\ntaw = 1\n")
        with self.assertRaises(ConfigurationError) as cm:
            config.validate()
        self.assertIn("lamda", str(cm.exception))
        self.assertIn("taw", str(cm.exception))

    def test_every_schema_key_validates(self):
        Config(config_dict=DEFAULT_SCHEMA).validate()

    def test_set_override(self):
        config = Config()
        config.set_override("loss.variant = seen_only")
        config.set_override("model.lambda=0.5")
        self.assertEqual(LossConfig.from_config(config).variant, LossVariant.SEEN_ONLY)
        self.assertEqual(config.getfloat("model", "lambda"), 0.5)

    @parameterized.expand([("no_equals", "model.lambda"), ("no_section", "lambda=2")])
    def test_bad_override(self, _, assignment):
        with self.assertRaises(ConfigurationError):
            Config().set_override(assignment)

    def test_resolved_echo_reproduces_config(self):
        config = Config(config_dict={"train": {"epochs": 3}, "loss": {"variant": "seen_only"}})
        resolved = config.resolved()
        self.assertEqual(resolved.get("model", "n_prototypes"), "128")
        echoed = Config(config_str=str(resolved))
        self.assertEqual(TrainConfig.from_config(echoed), TrainConfig.from_config(config))

    def test_resolved_rejects_unknown_keys(self):
        with self.assertRaises(ConfigurationError):
            Config(config_str="[train]\nepoch = 3\n").resolved()

    def test_getlist(self):
        config = Config(config_str="[scenegen]\nunseen = [sofa, desk]\n")
        self.assertEqual(config.getlist("scenegen", "unseen", element_type=str), ["sofa", "desk"])
        self.assertEqual(config.getlist("ablation", "cells", element_type=str), [])
        self.assertEqual(config.getlist("ablation", "seeds", element_type=int), [0, 1, 2])

    def test_getarray(self):
        config = Config(config_str="[train]\nstrong_scale = [0.9, 1.1]\n")
        arr = config.getarray("train", "strong_scale")
        self.assertEqual(arr.tolist(), [0.9, 1.1])

    def test_inline_comments(self):
        config = Config(config_str="[model]\nn_kernels = 4 # kernels per class\n")
        self.assertEqual(config.getint("model", "n_kernels"), 4)

    def test_missing_file(self):
        with self.assertRaises(FileNotFoundError):
            Config(config_fnames=[os.path.join(tempfile.gettempdir(), "no_such_primseg.ini")])

    def test_shipped_configs_validate(self):
        root = os.path.join(os.path.dirname(os.path.dirname(__file__)), "configs")
        for fname in ("default.ini", "ablation.ini", "unseen_sweep.ini"):
            config = Config(config_fnames=[os.path.join(root, fname)])
            config.validate()
        sweep = AblationGrid.from_config(
            Config(config_fnames=[os.path.join(root, "unseen_sweep.ini")])
        )
        self.assertEqual(len(sweep.cells), 4 * 3)
        self.assertEqual(sweep.cells[-1].name, "supervised@6u")
        default = Config(config_fnames=[os.path.join(root, "default.ini")])
        self.assertEqual(
            TrainConfig.from_config(default), TrainConfig.from_config(Config())
        )

    def test_jsonify(self):
        config = Config(config_dict={"model": {"n_kernels": 4}})
        self.assertIn('"n_kernels": "4"', config.jsonify())


if __name__ == "__main__":
    unittest.main()
