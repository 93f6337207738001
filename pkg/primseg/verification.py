#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, replace
from typing import Any, Callable, Dict, Tuple

import pandas as pd
import primseg.utils_logging as utils_logging
import torch
from primseg.config import Config
from primseg.exceptions import ConfigurationError
from primseg.models.descriptors import DESCRIPTOR_DIM
from primseg.models.segmenter import ModelConfig, Segmenter
from primseg.numerics.gradcheck import gradient_check, GradCheckReport
from primseg.numerics.params import ComputeConfig, ParamTensor
from primseg.objective import (
    Batch,
    consistency_loss,
    LossConfig,
    LossValue,
    LossVariant,
    pseudo_label_loss,
    seen_loss,
    SeenForm,
    total_loss,
    unknown_aware_loss,
)
from primseg.scenegen.taxonomy import SplitSpec
from primseg.utils import numpy_rng, torch_generator

logger = utils_logging.getLogger(logging.INFO)


@dataclass(frozen=True)
class GradCheckConfig:
    """Micro-problem sizes and finite-difference settings for the block checks."""

    step: float = 1e-5
    tolerance: float = 1e-4
    n_points: int = 20
    n_prototypes: int = 8
    n_kernels: int = 4
    n_classes: int = 5
    n_unseen: int = 2
    embed_dim: int = 16
    max_entries: int = 64

    def __post_init__(self):
        if not 1 <= self.n_unseen < self.n_classes:
            raise ConfigurationError(
                f"need 1 <= n_unseen < n_classes, got {self.n_unseen} and {self.n_classes}"
            )
        if self.n_points < 4:
            raise ConfigurationError(f"n_points must be >= 4, got {self.n_points}")

    @classmethod
    def from_config(cls, config: Config) -> GradCheckConfig:
        return cls(
            step=config.getfloat("gradcheck", "step"),
            tolerance=config.getfloat("gradcheck", "tolerance"),
            n_points=config.getint("gradcheck", "n_points"),
            n_prototypes=config.getint("gradcheck", "n_prototypes"),
            n_kernels=config.getint("gradcheck", "n_kernels"),
            n_classes=config.getint("gradcheck", "n_classes"),
            n_unseen=config.getint("gradcheck", "n_unseen"),
            embed_dim=config.getint("gradcheck", "embed_dim"),
            max_entries=config.getint("gradcheck", "max_entries"),
        )


def _loss_block(
    d: ParamTensor, fn: Callable[[torch.Tensor], LossValue]
) -> Callable[[bool], float]:
    def loss_fn(accumulate: bool) -> float:
        out = fn(d.values)
        if accumulate:
            d.accumulate(out.grad)
        return out.value

    return loss_fn


def _projection_block(
    forward: Callable[[], Tuple[torch.Tensor, Any]],
    backward: Callable[[torch.Tensor, Any], Any],
    weights: torch.Tensor,
) -> Callable[[bool], float]:
    # scalar <weights, output> so every output entry gets a distinct upstream gradient
    def loss_fn(accumulate: bool) -> float:
        out, cache = forward()
        if accumulate:
            backward(weights, cache)
        return float((out * weights).sum())

    return loss_fn


def run_gradient_checks(
    gc: GradCheckConfig,
    model_config: ModelConfig = ModelConfig(),
    loss_config: LossConfig = LossConfig(),
    seed: int = 0,
) -> Dict[str, GradCheckReport]:
    """Finite-difference check of every hand-written backward pass.

    Always runs in double precision on a random micro-batch: gc.n_points
    points, gc.n_classes classes of which the last gc.n_unseen are unseen,
    and the model shrunk to gc.n_prototypes prototypes and gc.n_kernels kernels.

    Returns:
        Dict[str, GradCheckReport]: One report per block.
    """
    gen = torch_generator(seed, "gradcheck")
    rng = numpy_rng(seed, "gradcheck")
    model_config = replace(
        model_config, n_prototypes=gc.n_prototypes, n_kernels=gc.n_kernels, use_prototypes=True
    )
    compute = ComputeConfig(precision="double", seed=seed)
    model = Segmenter(model_config, gc.embed_dim, compute)

    descriptors = torch.randn(gc.n_points, DESCRIPTOR_DIM, generator=gen, dtype=torch.float64)
    embeddings = torch.randn(gc.n_classes, gc.embed_dim, generator=gen, dtype=torch.float64)
    n_seen = gc.n_classes - gc.n_unseen
    split = SplitSpec(
        seen=frozenset(range(n_seen)), unseen=frozenset(range(n_seen, gc.n_classes))
    )
    half = gc.n_points // 2
    seen_idx = torch.arange(half)
    seen_labels = torch.as_tensor(rng.integers(0, n_seen, half))
    unseen_idx = torch.arange(half, gc.n_points)

    def batch_for(d: torch.Tensor) -> Batch:
        return Batch(d, seen_idx, seen_labels, unseen_idx, split)

    def check(name: str, loss_fn, params) -> GradCheckReport:
        report = gradient_check(
            loss_fn,
            params,
            step=gc.step,
            tolerance=gc.tolerance,
            max_entries=gc.max_entries,
            generator=numpy_rng(seed, "gradcheck", name),
        )
        status = "passed" if report.passed else f"FAILED on {report.failures}"
        logger.info(f"gradcheck {name}: max rel error {report.worst:.3g} {status}")
        return report

    reports: Dict[str, GradCheckReport] = {}

    def attention_forward():
        vis, cache = model.bank.forward(features)
        return vis.alpha, cache

    def generator_forward():
        kernels, cache = model.kernel_bank.forward(embeddings)
        return kernels.kernels, cache

    features = model.backbone.forward(descriptors)[0].detach()
    upstream = torch.randn(features.shape, generator=gen, dtype=torch.float64)
    reports["backbone"] = check(
        "backbone",
        _projection_block(
            lambda: model.backbone.forward(descriptors), model.backbone.backward, upstream
        ),
        model.backbone.parameters(),
    )

    upstream = torch.randn(gc.n_points, gc.n_prototypes, generator=gen, dtype=torch.float64)
    reports["attention"] = check(
        "attention",
        _projection_block(attention_forward, model.bank.backward, upstream),
        model.bank.parameters(),
    )

    upstream = torch.randn(
        gc.n_classes, gc.n_kernels, gc.n_prototypes, generator=gen, dtype=torch.float64
    )
    reports["generator"] = check(
        "generator",
        _projection_block(generator_forward, model.kernel_bank.backward, upstream),
        model.kernel_bank.parameters(),
    )

    d = ParamTensor(
        "similarity", torch.randn(gc.n_points, gc.n_classes, generator=gen, dtype=torch.float64)
    )
    # a sharp weak view so that some masked points clear the confidence threshold
    weak = 10 * torch.randn(gc.n_points, gc.n_classes, generator=gen, dtype=torch.float64)
    literal = replace(loss_config, seen_form=SeenForm.LITERAL)
    per_point = replace(loss_config, seen_form=SeenForm.PER_POINT)
    loss_blocks = {
        "seen_loss": lambda x: seen_loss(batch_for(x), per_point),
        "seen_loss_literal": lambda x: seen_loss(batch_for(x), literal),
        "unknown_aware_loss": lambda x: unknown_aware_loss(batch_for(x), loss_config),
        "pseudo_label_loss": lambda x: pseudo_label_loss(batch_for(x), loss_config),
        "consistency_loss": lambda x: consistency_loss(weak, x, unseen_idx, loss_config),
        "total_loss": lambda x: _total_as_value(batch_for(x), per_point, weak),
    }
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for name, fn in loss_blocks.items():
            reports[name] = check(name, _loss_block(d, fn), [d])

    full = replace(per_point, variant=LossVariant.SEEN_PLUS_UNKNOWN_AWARE)

    def end_to_end(accumulate: bool) -> float:
        sim, cache = model.forward(descriptors, embeddings)
        result = total_loss(batch_for(sim), full)
        if accumulate:
            model.backward(result.grad, cache)
        return result.value

    reports["end_to_end"] = check("end_to_end", end_to_end, model.parameters())
    return reports


def _total_as_value(
    batch: Batch, cfg: LossConfig, weak_similarity: torch.Tensor
) -> LossValue:
    # the checked matrix doubles as the strong view when the variant needs one
    result = total_loss(batch, cfg, weak_similarity, batch.similarity)
    grad = result.grad
    if result.strong_grad is not None:
        grad = grad + result.strong_grad
    return LossValue(result.value, grad)


def reports_table(reports: Dict[str, GradCheckReport]) -> pd.DataFrame:
    records = []
    for block, report in reports.items():
        records.extend(report.to_records(block))
    return pd.DataFrame(records)


def all_passed(reports: Dict[str, GradCheckReport]) -> bool:
    return all(r.passed for r in reports.values())


__all__ = [
    "GradCheckConfig",
    "run_gradient_checks",
    "reports_table",
    "all_passed",
]
