#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np
import primseg.utils_logging as utils_logging
import torch
from primseg.config import Config
from primseg.exceptions import ConfigurationError, EmbeddingFormatError
from primseg.utils import numpy_rng

logger = utils_logging.getLogger(logging.INFO)


class EmbeddingSource(str, Enum):
    FILE = "file"
    SYNTHETIC = "synthetic"


@dataclass(frozen=True, eq=False)
class EmbeddingTable:
    """One E-dimensional word vector per class, rows in class-id order."""

    class_names: List[str]
    vectors: np.ndarray
    source: EmbeddingSource

    def __post_init__(self):
        object.__setattr__(self, "class_names", list(self.class_names))
        object.__setattr__(self, "vectors", np.array(self.vectors, dtype=np.float64))
        object.__setattr__(self, "source", EmbeddingSource(self.source))
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.class_names):
            raise ConfigurationError(
                f"{len(self.class_names)} class names but vectors of shape {self.vectors.shape}"
            )
        if not np.isfinite(self.vectors).all():
            raise ConfigurationError("embedding vectors must be finite")
        self.vectors.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def as_tensor(self, dtype: torch.dtype = torch.float64) -> torch.Tensor:
        return torch.tensor(self.vectors, dtype=dtype)

    def normalized(self) -> EmbeddingTable:
        norms = np.linalg.norm(self.vectors, axis=1, keepdims=True)
        if (norms == 0).any():
            raise ConfigurationError("cannot normalize a zero embedding vector")
        return EmbeddingTable(self.class_names, self.vectors / norms, self.source)


def load_embeddings(
    path: str, class_names: Sequence[str], normalize: bool = False
) -> EmbeddingTable:
    """Load class vectors from a whitespace-separated text file.

    Every line is `name v1 v2 ... vE`. Lines for classes that were not asked
    for are still parsed, so a ragged or non-numeric line anywhere is an
    error. For repeated names the first line wins. Vectors are returned
    unnormalized unless normalize is set.

    Args:
        path (str): Embedding file.
        class_names (Sequence[str]): Classes to look up, in the order wanted.
        normalize (bool): Unit-normalize every row. Defaults to False.

    Returns:
        EmbeddingTable: Rows ordered like class_names.
    """
    found = {}
    dim: Optional[int] = None
    with open(path, "r") as f:
        for lineno, line in enumerate(f, start=1):
            tokens = line.split()
            if not tokens:
                continue
            name, values = tokens[0], tokens[1:]
            if not values:
                raise EmbeddingFormatError(f"{path}:{lineno}: '{name}' has no vector")
            if dim is None:
                dim = len(values)
            elif len(values) != dim:
                raise EmbeddingFormatError(
                    f"{path}:{lineno}: '{name}' has {len(values)} values, earlier lines have {dim}"
                )
            try:
                vec = np.array([float(v) for v in values])
            except ValueError:
                bad = next(v for v in values if not _is_float(v))
                raise EmbeddingFormatError(
                    f"{path}:{lineno}: non-numeric token '{bad}' in vector for '{name}'"
                ) from None
            found.setdefault(name, vec)

    missing = [c for c in class_names if c not in found]
    if missing:
        raise ConfigurationError(f"{path} has no embedding for {', '.join(missing)}")
    table = EmbeddingTable(
        list(class_names),
        np.stack([found[c] for c in class_names]),
        EmbeddingSource.FILE,
    )
    return table.normalized() if normalize else table


def _is_float(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def write_embeddings(table: EmbeddingTable, path: str) -> None:
    """Write a table in the format load_embeddings reads, exactly."""
    for name in table.class_names:
        if not name or any(ch.isspace() for ch in name):
            raise ConfigurationError(f"class name '{name}' cannot contain whitespace")
    with open(path, "w") as f:
        for name, vec in zip(table.class_names, table.vectors):
            f.write(name + " " + " ".join(f"{v:.17g}" for v in vec) + "\n")


def synthesize_embeddings(
    mixtures: np.ndarray,
    dim: int = 600,
    noise_sigma: float = 0.05,
    seed: int = 0,
    class_names: Optional[Sequence[str]] = None,
) -> EmbeddingTable:
    """Stand-in word vectors whose similarity follows primitive-mixture similarity.

    Each class gets w_c = normalize(A @ m_c + eps_c) where A is a fixed
    dim x P unit Gaussian matrix and eps_c ~ N(0, noise_sigma^2 I). A random
    Gaussian A nearly preserves angles when dim >> P, so classes built from
    the same primitives get close vectors.

    Args:
        mixtures (np.ndarray): C x P primitive mixtures, rows summing to 1.
        dim (int): Embedding dimension E. Must be >= P.
        noise_sigma (float): Per-entry noise std.
        seed (int): Seed for A and the noise.
        class_names (Sequence[str], optional): Defaults to "class_<i>".

    Returns:
        EmbeddingTable: Unit-norm rows.
    """
    mixtures = np.asarray(mixtures, dtype=np.float64)
    if mixtures.ndim != 2:
        raise ConfigurationError(f"mixtures must be C x P, got shape {mixtures.shape}")
    n_classes, n_kinds = mixtures.shape
    if dim < n_kinds:
        raise ConfigurationError(
            f"embedding dim {dim} is smaller than the number of primitive kinds {n_kinds}"
        )
    if (mixtures < 0).any() or not np.allclose(mixtures.sum(axis=1), 1.0, atol=1e-9):
        raise ConfigurationError("mixture rows must be non-negative and sum to 1")
    if noise_sigma < 0:
        raise ConfigurationError(f"noise_sigma must be >= 0, got {noise_sigma}")

    rng = numpy_rng(seed, "embeddings")
    mixing = rng.standard_normal((dim, n_kinds))
    noise = rng.standard_normal((n_classes, dim)) * noise_sigma
    vectors = mixtures @ mixing.T + noise
    if class_names is None:
        class_names = [f"class_{i}" for i in range(n_classes)]
    return EmbeddingTable(class_names, vectors, EmbeddingSource.SYNTHETIC).normalized()


def embeddings_from_config(
    config: Config, class_names: Sequence[str], mixtures: np.ndarray
) -> EmbeddingTable:
    """Build the table described by the [semantics] section."""
    source = EmbeddingSource(config.get("semantics", "source"))
    if source == EmbeddingSource.FILE:
        path = config.get("semantics", "path")
        if not path:
            raise ConfigurationError("[semantics] source = file needs a path")
        table = load_embeddings(
            path, class_names, normalize=config.getboolean("semantics", "normalize")
        )
    else:
        table = synthesize_embeddings(
            mixtures,
            dim=config.getint("semantics", "dim"),
            noise_sigma=config.getfloat("semantics", "noise_sigma"),
            seed=config.getint("common", "seed"),
            class_names=class_names,
        )
    logger.info(f"Loaded {source.value} embeddings: {len(class_names)} classes x {table.dim} dims")
    return table
