#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

"""Checkpoint container.

A checkpoint is a single torch.save archive holding one dict:

    {
        "format_version": int,             # FORMAT_VERSION below
        "shapes": {name: [d0, d1, ...]},   # shape header for every tensor
        "tensors": {name: torch.Tensor},   # named parameter and buffer arrays
        "metadata": {str: str | int | float | list | dict},
    }

It is read back with weights_only=True, so nothing but tensors and plain
containers is ever unpickled. A missing or mismatched shape header, an unknown
format version or an unreadable (e.g. truncated) file raises CheckpointError.
"""

from typing import Any, Dict, Mapping, Tuple

import torch
from primseg.exceptions import CheckpointError

FORMAT_VERSION = 1


def write_tensors(
    path: str, tensors: Mapping[str, torch.Tensor], metadata: Mapping[str, Any]
) -> None:
    payload = {
        "format_version": FORMAT_VERSION,
        "shapes": {name: list(t.shape) for name, t in tensors.items()},
        "tensors": {name: t.detach().clone().contiguous() for name, t in tensors.items()},
        "metadata": dict(metadata),
    }
    torch.save(payload, path)


def read_tensors(path: str) -> Tuple[Dict[str, torch.Tensor], Dict[str, Any]]:
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except FileNotFoundError:
        raise
    except Exception as e:
        raise CheckpointError(f"Could not read checkpoint {path}: {e}") from e

    if not isinstance(payload, dict) or "format_version" not in payload:
        raise CheckpointError(f"{path} is not a primseg checkpoint!")
    version = payload["format_version"]
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f"{path} has format version {version}, expected {FORMAT_VERSION}"
        )
    tensors = payload.get("tensors", {})
    shapes = payload.get("shapes", {})
    if set(tensors) != set(shapes):
        raise CheckpointError(f"{path}: shape header does not list the same tensors")
    for name, t in tensors.items():
        if list(t.shape) != list(shapes[name]):
            raise CheckpointError(
                f"{path}: tensor {name} has shape {list(t.shape)}, header says {shapes[name]}"
            )
    return tensors, payload.get("metadata", {})
