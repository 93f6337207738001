#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

import ast
import configparser
import difflib
import json
from typing import Any, Dict, List, Mapping, Optional, Sequence, TypeVar

import numpy as np
from primseg.exceptions import ConfigurationError

_T = TypeVar("_T")

# Every known section and key, with its default. Model widths (F=96, A=16,
# M=128, K=16), lambda=4, E=600 and the Adam settings are the reference
# values; scene counts and epochs are sized for a single desktop.
DEFAULT_SCHEMA: Dict[str, Dict[str, str]] = {
    "common": {
        "seed": "0",
        "precision": "double",
        "deterministic": "true",
        "out_dir": "runs",
        "log_level": "INFO",
    },
    "scenegen": {
        "n_train_scenes": "200",
        "n_test_scenes": "40",
        "min_objects": "4",
        "max_objects": "7",
        "floor_extent": "8.0",
        "min_separation": "1.6",
        "max_retries": "500",
        "taxonomy_path": "",
        "unseen": "",
        "nproc": "1",
    },
    "semantics": {
        "source": "synthetic",
        "path": "",
        "dim": "600",
        "noise_sigma": "0.05",
        "normalize": "false",
    },
    "model": {
        "feature_dim": "96",
        "attention_dim": "16",
        "n_prototypes": "128",
        "n_kernels": "16",
        "generator_hidden": "96",
        "k_neighbors": "16",
        "lambda": "4.0",
        "use_prototypes": "true",
    },
    "loss": {
        "tau": "1.0",
        "tau_u": "1.0",
        "weight_u": "1.0",
        "variant": "seen_plus_unknown_aware",
        "confidence_threshold": "0.8",
        "seen_form": "per_point",
    },
    "train": {
        "epochs": "300",
        "batch_scenes": "8",
        "lr": "1e-3",
        "beta1": "0.9",
        "beta2": "0.999",
        "eps": "1e-8",
        "weak_rotation": "[0.0, 0.0]",
        "weak_jitter": "0.0",
        "weak_scale": "[1.0, 1.0]",
        "strong_rotation": "[-0.5, 0.5]",
        "strong_jitter": "0.01",
        "strong_scale": "[0.9, 1.1]",
    },
    "data": {
        "scene_dir": "",
        "checkpoint": "",
    },
    "ablation": {
        "cells": "",
        "variants": "[seen_only, seen_plus_pseudo, seen_plus_self, seen_plus_unknown_aware]",
        "kernel_counts": "[2, 4, 8, 16]",
        "prototype_counts": "[48, 96, 128]",
        "seeds": "[0, 1, 2]",
        "supervised": "false",
        "unseen_splits": "",
        "nproc": "1",
    },
    "gradcheck": {
        "step": "1e-5",
        "tolerance": "1e-4",
        "n_points": "20",
        "n_prototypes": "8",
        "n_kernels": "4",
        "n_classes": "5",
        "n_unseen": "2",
        "embed_dim": "16",
        "max_entries": "64",
    },
}


class Config(configparser.ConfigParser):

    schema: Dict[str, Dict[str, str]] = DEFAULT_SCHEMA

    def __init__(
        self,
        config_dict: Optional[Mapping[str, Any]] = None,
        config_fnames: Optional[Sequence[str]] = None,
        config_str: Optional[str] = None,
    ):
        """Initialize the primseg config object. Most objects in primseg can be
        built from it by calling object.from_config(config).

        Args:
            config_dict (Mapping[str, str], optional): Mapping to build configuration from.
                Keys are section names, values are dictionaries with keys and values that
                should be present in the section. Defaults to None.
            config_fnames (Sequence[str], optional): List of INI filenames to load
                configuration from. Defaults to None.
            config_str (str, optional): String formatted as an INI file to load configuration
                from. Defaults to None.
        """
        super().__init__(
            inline_comment_prefixes=("#"),
            empty_lines_in_values=False,
            default_section="common",
            interpolation=configparser.ExtendedInterpolation(),
            converters={
                "list": self._str_to_list,
                "array": self._str_to_array,
            },
            allow_no_value=True,
        )

        self.update(
            config_dict=config_dict,
            config_fnames=config_fnames,
            config_str=config_str,
        )

    def get(  # type: ignore[override]
        self,
        section,
        option,
        *,
        raw=False,
        vars=None,
        fallback=configparser._UNSET,
    ):
        """
        Override configparser to:
        1. Fall back to the schema default when no fallback is given, so
        from_config methods never repeat defaults.
        2. Read from common if a section doesn't exist.
        """
        if fallback is configparser._UNSET:
            default = self.schema.get(section, {}).get(option)
            if default is None:
                default = self.schema["common"].get(option)
            if default is not None:
                fallback = default
        if section != self.default_section and not self.has_section(section):
            section = self.default_section
        return super().get(section, option, raw=raw, vars=vars, fallback=fallback)

    def _get(self, section, conv, option, **kwargs):
        # pass extra **kwargs (e.g. element_type) to the converter
        get_kwargs = {
            k: kwargs.pop(k) for k in ("raw", "vars", "fallback") if k in kwargs
        }
        value = self.get(section, option, **get_kwargs)
        if value is None:
            return None
        return conv(value, **kwargs)

    def to_dict(self, deduplicate=True):
        _dict = {}
        for section in self:
            _dict[section] = {}
            for setting in self[section]:
                if deduplicate and section != "common" and setting in self["common"]:
                    continue
                _dict[section][setting] = self[section][setting]
        return _dict

    def jsonify(self):
        return json.dumps(self.to_dict())

    def update(
        self,
        config_dict: Mapping[str, Any] = None,
        config_fnames: Sequence[str] = None,
        config_str: str = None,
    ):
        """Update this object with a new configuration.

        Args:
            config_dict (Mapping[str, str], optional): Mapping to build configuration from.
                Keys are section names, values are dictionaries with keys and values that
                should be present in the section. Defaults to None.
            config_fnames (Sequence[str], optional): List of INI filenames to load
                configuration from. Defaults to None.
            config_str (str, optional): String formatted as an INI file to load configuration
                from. Defaults to None.
        """
        if config_dict is not None:
            self.read_dict(
                {
                    section: {k: str(v) for k, v in values.items()}
                    for section, values in config_dict.items()
                }
            )

        if config_fnames is not None:
            read_ok = self.read(config_fnames)
            if len(read_ok) < 1:
                raise FileNotFoundError

        if config_str is not None:
            self.read_string(config_str)

    def _own_keys(self, section: str) -> List[str]:
        if section == "common":
            return list(self["common"].keys())
        inherited = set(self["common"].keys())
        return [k for k in self[section].keys() if k not in inherited]

    def validate(self) -> None:
        """Check every section and key against the schema.

        Raises:
            ConfigurationError: listing all unknown sections and keys, each with
                the closest known name when there is one.
        """
        problems = []
        for section in ["common"] + self.sections():
            if section not in self.schema:
                hint = difflib.get_close_matches(section, self.schema.keys(), n=1)
                msg = f"unknown section [{section}]"
                if hint:
                    msg += f" (did you mean [{hint[0]}]?)"
                problems.append(msg)
                continue
            known = self.schema[section]
            for key in self._own_keys(section):
                if key in known:
                    continue
                hint = difflib.get_close_matches(key, known.keys(), n=1)
                msg = f"unknown key '{key}' in [{section}]"
                if hint:
                    msg += f" (did you mean '{hint[0]}'?)"
                problems.append(msg)
        if problems:
            raise ConfigurationError("Invalid config: " + "; ".join(problems))

    def resolved(self) -> "Config":
        """Return a copy with every schema default applied (validated first)."""
        self.validate()
        out = Config(config_dict=self.schema)
        out.update(config_dict=self.to_dict())
        return out

    def set_override(self, assignment: str) -> None:
        """Apply a command-line override of the form section.key=value."""
        if "=" not in assignment or "." not in assignment.split("=", 1)[0]:
            raise ConfigurationError(
                f"Override '{assignment}' should look like section.key=value!"
            )
        lhs, value = assignment.split("=", 1)
        section, key = lhs.strip().split(".", 1)
        if section != "common" and not self.has_section(section):
            self.add_section(section)
        self[section][key] = value.strip()

    def _str_to_list(self, v: str, element_type: _T = float) -> List[_T]:
        v = v.strip()
        if v == "":
            return []
        if v[0] == "[" and v[-1] == "]":
            if v == "[]":  # empty list
                return []
            else:
                return [element_type(i.strip()) for i in v[1:-1].split(",")]
        else:
            return [element_type(v)]

    def _str_to_array(self, v: str) -> np.ndarray:
        v = ast.literal_eval(v)
        return np.array(v, dtype=float)

    def __repr__(self):
        return f"Config at {hex(id(self))}: \n {str(self)}"

    def __str__(self):
        _str = ""
        for section in self:
            _str += f"[{section}]\n"
            for setting in self[section]:
                if section != "common" and setting in self["common"]:
                    continue
                _str += f"{setting} = {self[section][setting]}\n"
            _str += "\n"
        return _str
