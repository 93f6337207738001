#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

"""Scene and split files.

A scene file is plain text:

    # primseg scene
    format_version 1
    point_count <N>
    class_count <C>
    x y z label object_id
    <N rows of: x y z label object_id>

Coordinates are written with 17 significant digits, which reads back to the
identical double. Unlabeled points carry label -1.
"""

import glob
import json
import os
from typing import List, Sequence, Tuple

import numpy as np
import pandas as pd
from pandas.api.types import is_numeric_dtype
from primseg.exceptions import SceneFormatError
from primseg.scenegen.scene import Scene
from primseg.scenegen.taxonomy import SplitSpec

SCENE_FORMAT_VERSION = 1
SCENE_SUFFIX = ".scene"
_MAGIC = "# primseg scene"
_COLUMNS = ["x", "y", "z", "label", "object_id"]
_HEADER_LINES = 5


def write_scene(scene: Scene, path: str) -> None:
    scene.validate()
    with open(path, "w") as f:
        f.write(f"{_MAGIC}\n")
        f.write(f"format_version {SCENE_FORMAT_VERSION}\n")
        f.write(f"point_count {scene.n_points}\n")
        f.write(f"class_count {scene.class_count}\n")
        f.write(" ".join(_COLUMNS) + "\n")
        body = np.column_stack(
            [scene.points, scene.labels.astype(np.float64), scene.object_ids.astype(np.float64)]
        )
        np.savetxt(f, body, fmt=["%.17g"] * 3 + ["%d", "%d"])


def _header_value(line: str, lineno: int, key: str, path: str) -> int:
    parts = line.split()
    if len(parts) != 2 or parts[0] != key:
        raise SceneFormatError(
            f"{path}:{lineno}: expected '{key} <int>', got '{line.rstrip()}'"
        )
    try:
        return int(parts[1])
    except ValueError:
        raise SceneFormatError(
            f"{path}:{lineno}: '{parts[1]}' is not an integer {key}"
        ) from None


def _column(df: pd.DataFrame, name: str, dtype, path: str) -> np.ndarray:
    col = df[name]
    # the parser leaves a column as object only when some field is not a number
    numeric = col if is_numeric_dtype(col) else pd.to_numeric(col, errors="coerce")
    bad = np.flatnonzero(numeric.isna().to_numpy())
    if bad.size:
        row = int(bad[0])
        raise SceneFormatError(
            f"{path}:{row + _HEADER_LINES + 1}: missing or non-numeric {name} "
            f"'{col.iloc[row]}' in row {row}"
        )
    if dtype is np.int64:
        values = numeric.to_numpy(dtype=np.float64)
        frac = np.flatnonzero(values != np.round(values))
        if frac.size:
            row = int(frac[0])
            raise SceneFormatError(
                f"{path}:{row + _HEADER_LINES + 1}: {name} '{col.iloc[row]}' is not an integer"
            )
        return values.astype(np.int64)
    return numeric.to_numpy(dtype=np.float64)


def read_scene(path: str) -> Scene:
    """Parse and validate a scene file.

    Raises:
        FileNotFoundError: if path does not exist.
        SceneFormatError: on a bad header, a non-numeric or missing field (with
            its line number), a row count that does not match point_count, or
            a row that breaks the Scene invariants (naming the row).
    """
    with open(path, "r") as f:
        header = [f.readline() for _ in range(_HEADER_LINES)]
    if header[0].rstrip() != _MAGIC:
        raise SceneFormatError(f"{path}:1: not a primseg scene file")
    version = _header_value(header[1], 2, "format_version", path)
    if version != SCENE_FORMAT_VERSION:
        raise SceneFormatError(
            f"{path}:2: format_version {version} is not supported (expected {SCENE_FORMAT_VERSION})"
        )
    n_points = _header_value(header[2], 3, "point_count", path)
    class_count = _header_value(header[3], 4, "class_count", path)
    if header[4].split() != _COLUMNS:
        raise SceneFormatError(
            f"{path}:5: expected column line '{' '.join(_COLUMNS)}', got '{header[4].rstrip()}'"
        )

    try:
        df = pd.read_csv(
            path,
            sep=r"\s+",
            skiprows=_HEADER_LINES,
            header=None,
            names=_COLUMNS,
            float_precision="round_trip",
        )
    except pd.errors.EmptyDataError:
        df = pd.DataFrame(columns=_COLUMNS, dtype=np.float64)
    except pd.errors.ParserError as e:
        raise SceneFormatError(f"{path}: malformed row: {e}") from e

    if len(df) != n_points:
        raise SceneFormatError(
            f"{path}: header says {n_points} points but found {len(df)} rows (truncated file?)"
        )
    points = np.column_stack([_column(df, c, np.float64, path) for c in ("x", "y", "z")])
    scene = Scene(
        points=points.reshape(-1, 3),
        labels=_column(df, "label", np.int64, path),
        object_ids=_column(df, "object_id", np.int64, path),
        class_count=class_count,
    )
    try:
        scene.validate()
    except SceneFormatError as e:
        raise SceneFormatError(f"{path}: {e}") from None
    return scene


def scene_path(directory: str, split_name: str, index: int) -> str:
    return os.path.join(directory, f"{split_name}_{index:05d}{SCENE_SUFFIX}")


def write_scene_dir(scenes: Sequence[Scene], directory: str, split_name: str) -> List[str]:
    os.makedirs(directory, exist_ok=True)
    paths = []
    for i, scene in enumerate(scenes):
        paths.append(scene_path(directory, split_name, i))
        write_scene(scene, paths[-1])
    return paths


def read_scene_dir(directory: str, split_name: str) -> List[Scene]:
    """Read every <split_name>_NNNNN.scene file in directory, in index order."""
    paths = sorted(glob.glob(os.path.join(directory, f"{split_name}_*{SCENE_SUFFIX}")))
    if not paths:
        raise FileNotFoundError(f"no {split_name} scenes found in {directory}")
    return [read_scene(p) for p in paths]


def write_split(split: SplitSpec, class_names: Sequence[str], path: str) -> None:
    with open(path, "w") as f:
        json.dump(split.to_dict(class_names), f, indent=2)


def read_split(path: str) -> Tuple[SplitSpec, List[str]]:
    """Read a split file; returns the split and the class names in id order."""
    with open(path, "r") as f:
        doc = json.load(f)
    split = SplitSpec(seen=frozenset(doc["seen"]), unseen=frozenset(doc["unseen"]))
    names = dict(zip(doc.get("seen", []), doc.get("seen_names", [])))
    names.update(zip(doc.get("unseen", []), doc.get("unseen_names", [])))
    class_names = [names.get(c, str(c)) for c in range(split.class_count)]
    return split, class_names
