#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

import hashlib
from typing import Any, Union

import numpy as np
import torch
from primseg.exceptions import NumericError


def derive_seed(seed: int, *tags: Any) -> int:
    """Derive a child seed from a top-level seed and a role tag.

    The derivation is a stable hash (blake2b over the textual tags), so it does not
    depend on PYTHONHASHSEED, process, or call order. This lets every module own an
    independent stream that is still reproducible from the single top-level seed.

    Args:
        seed (int): Top-level unsigned 64-bit seed.
        *tags: Role tags, e.g. ("scene", "train", 17).

    Returns:
        int: A 63-bit seed, safe for both numpy and torch generators.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(seed)).encode())
    for tag in tags:
        h.update(b"\x1f")
        h.update(str(tag).encode())
    return int.from_bytes(h.digest(), "little") & ((1 << 63) - 1)


def numpy_rng(seed: int, *tags: Any) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, *tags))


def torch_generator(seed: int, *tags: Any) -> torch.Generator:
    gen = torch.Generator()
    gen.manual_seed(derive_seed(seed, *tags))
    return gen


def check_finite(
    x: Union[np.ndarray, torch.Tensor], what: str = "tensor"
) -> None:
    """Raise NumericError if x holds a NaN or Inf."""
    if isinstance(x, torch.Tensor):
        ok = bool(torch.isfinite(x).all())
    else:
        ok = bool(np.isfinite(x).all())
    if not ok:
        raise NumericError(f"Non-finite values in {what}!")
