#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

"""Training losses over a similarity matrix D (points x classes).

Every loss returns a LossValue: the scalar and its gradient with respect to
the D it was given. Losses are means over the points they cover. A loss
whose point set is empty warns and returns 0 with a zero gradient.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional

import torch
from primseg.config import Config
from primseg.exceptions import ConfigurationError
from primseg.numerics.ops import log_softmax
from primseg.scenegen.taxonomy import SplitSpec


class LossVariant(str, Enum):
    SEEN_ONLY = "seen_only"
    SEEN_PLUS_PSEUDO = "seen_plus_pseudo"
    SEEN_PLUS_SELF = "seen_plus_self"
    SEEN_PLUS_UNKNOWN_AWARE = "seen_plus_unknown_aware"


class SeenForm(str, Enum):
    PER_POINT = "per_point"
    LITERAL = "literal"


@dataclass(frozen=True)
class LossConfig:
    tau: float = 1.0
    tau_u: float = 1.0
    weight_u: float = 1.0
    variant: LossVariant = LossVariant.SEEN_PLUS_UNKNOWN_AWARE
    confidence_threshold: float = 0.8
    seen_form: SeenForm = SeenForm.PER_POINT

    def __post_init__(self):
        object.__setattr__(self, "variant", LossVariant(self.variant))
        object.__setattr__(self, "seen_form", SeenForm(self.seen_form))
        if self.tau <= 0 or self.tau_u <= 0:
            raise ConfigurationError(
                f"tau and tau_u must be > 0, got {self.tau} and {self.tau_u}"
            )
        if self.weight_u < 0:
            raise ConfigurationError(f"weight_u must be >= 0, got {self.weight_u}")

    @classmethod
    def from_config(cls, config: Config) -> LossConfig:
        return cls(
            tau=config.getfloat("loss", "tau"),
            tau_u=config.getfloat("loss", "tau_u"),
            weight_u=config.getfloat("loss", "weight_u"),
            variant=LossVariant(config.get("loss", "variant")),
            confidence_threshold=config.getfloat("loss", "confidence_threshold"),
            seen_form=SeenForm(config.get("loss", "seen_form")),
        )


@dataclass
class Batch:
    """Similarity rows of one training step and which of them are labeled.

    Rows in seen_idx carry a seen-class label; rows in unseen_idx are the
    label-masked points. Ground truth for unseen rows never enters a Batch.
    """

    similarity: torch.Tensor
    seen_idx: torch.Tensor
    seen_labels: torch.Tensor
    unseen_idx: torch.Tensor
    split: SplitSpec

    def __post_init__(self):
        self.seen_idx = torch.as_tensor(self.seen_idx, dtype=torch.long)
        self.seen_labels = torch.as_tensor(self.seen_labels, dtype=torch.long)
        self.unseen_idx = torch.as_tensor(self.unseen_idx, dtype=torch.long)
        n, c = self.similarity.shape
        if c != self.split.class_count:
            raise ConfigurationError(
                f"similarity has {c} classes but the split has {self.split.class_count}"
            )
        if self.seen_idx.shape != self.seen_labels.shape:
            raise ConfigurationError("seen_idx and seen_labels differ in length")
        if len(set(self.seen_idx.tolist()) & set(self.unseen_idx.tolist())):
            raise ConfigurationError("a row cannot be both seen and unseen")
        if not set(self.seen_labels.tolist()) <= self.split.seen:
            raise ConfigurationError("seen rows carry labels outside the seen classes")

    @property
    def seen_similarity(self) -> torch.Tensor:
        return self.similarity[self.seen_idx]

    @property
    def unseen_similarity(self) -> torch.Tensor:
        return self.similarity[self.unseen_idx]


@dataclass
class LossValue:
    value: float
    grad: torch.Tensor


def _scatter_rows(rows: torch.Tensor, idx: torch.Tensor, like: torch.Tensor) -> torch.Tensor:
    out = torch.zeros_like(like)
    out[idx] = rows
    return out


def _empty(what: str, like: torch.Tensor) -> LossValue:
    warnings.warn(f"{what} has no points in this batch; contributing 0", RuntimeWarning)
    return LossValue(0.0, torch.zeros_like(like))


def _cross_entropy(d: torch.Tensor, targets: torch.Tensor, tau: float):
    """Mean of -log softmax(d / tau)[target] and its gradient wrt d."""
    n = d.shape[0]
    logp = log_softmax(d / tau)
    rows = torch.arange(n)
    value = -logp[rows, targets].mean()
    grad = torch.exp(logp)
    grad[rows, targets] -= 1.0
    return float(value), grad / (tau * n)


def seen_loss(batch: Batch, cfg: LossConfig) -> LossValue:
    """Contrastive loss of seen points against every class, seen and unseen.

    The per-point form averages -log p_t(y_t) with p_t the softmax of
    D[t] / tau over all classes. The literal form is -log of the mean of
    p_t(y_t) over seen points.
    """
    if batch.seen_idx.numel() == 0:
        return _empty("seen_loss", batch.similarity)
    d = batch.seen_similarity
    if cfg.seen_form == SeenForm.PER_POINT:
        value, grad = _cross_entropy(d, batch.seen_labels, cfg.tau)
        return LossValue(value, _scatter_rows(grad, batch.seen_idx, batch.similarity))

    n = d.shape[0]
    rows = torch.arange(n)
    p = torch.exp(log_softmax(d / cfg.tau))
    q = p[rows, batch.seen_labels]
    mean_q = q.mean()
    one_hot = torch.zeros_like(p)
    one_hot[rows, batch.seen_labels] = 1.0
    grad = -(q[:, None] * (one_hot - p)) / (cfg.tau * n * mean_q)
    value = float(-torch.log(mean_q))
    return LossValue(value, _scatter_rows(grad, batch.seen_idx, batch.similarity))


def unknown_aware_loss(batch: Batch, cfg: LossConfig) -> LossValue:
    """Mean softmax mass (temperature tau_u) that masked points put on seen classes."""
    if batch.unseen_idx.numel() == 0:
        return _empty("unknown_aware_loss", batch.similarity)
    d = batch.unseen_similarity
    n = d.shape[0]
    p = torch.exp(log_softmax(d / cfg.tau_u))
    is_seen = torch.zeros(d.shape[1], dtype=d.dtype)
    is_seen[batch.split.seen_ids] = 1.0
    mass = p @ is_seen
    grad = p * (is_seen[None, :] - mass[:, None]) / (cfg.tau_u * n)
    value = float(mass.mean())
    return LossValue(value, _scatter_rows(grad, batch.unseen_idx, batch.similarity))


def seen_class_mass(d: torch.Tensor, split: SplitSpec, tau_u: float = 1.0) -> torch.Tensor:
    """Per-row softmax mass on seen classes."""
    p = torch.exp(log_softmax(d / tau_u))
    return p[:, split.seen_ids].sum(dim=1)


def pseudo_labels(d: torch.Tensor, split: SplitSpec) -> torch.Tensor:
    """Argmax over the unseen columns only, as full class ids (lowest id wins ties)."""
    unseen = torch.tensor(split.unseen_ids, dtype=torch.long)
    return unseen[torch.argmax(d[:, unseen], dim=1)]


def pseudo_label_loss(batch: Batch, cfg: LossConfig) -> LossValue:
    """Cross-entropy of masked points against their current best unseen class."""
    if batch.unseen_idx.numel() == 0:
        return _empty("pseudo_label_loss", batch.similarity)
    if not batch.split.unseen:
        return _empty("pseudo_label_loss (no unseen classes)", batch.similarity)
    d = batch.unseen_similarity
    value, grad = _cross_entropy(d, pseudo_labels(d.detach(), batch.split), cfg.tau)
    return LossValue(value, _scatter_rows(grad, batch.unseen_idx, batch.similarity))


def consistency_loss(
    weak_similarity: torch.Tensor,
    strong_similarity: torch.Tensor,
    unseen_idx: torch.Tensor,
    cfg: LossConfig,
) -> LossValue:
    """Cross-entropy between confident weak-view argmax and the strong view.

    The two similarity matrices come from two augmentations of the same
    points, row for row. Only masked points whose weak-view top probability
    exceeds cfg.confidence_threshold count. The gradient is with respect to
    the strong view; the weak view is a fixed target.
    """
    unseen_idx = torch.as_tensor(unseen_idx, dtype=torch.long)
    if weak_similarity.shape != strong_similarity.shape:
        raise ConfigurationError(
            f"views differ in shape: {tuple(weak_similarity.shape)} vs "
            f"{tuple(strong_similarity.shape)}"
        )
    if unseen_idx.numel() == 0:
        return _empty("consistency_loss", strong_similarity)
    weak_p = torch.exp(log_softmax(weak_similarity[unseen_idx].detach() / cfg.tau))
    confidence, targets = weak_p.max(dim=1)
    keep = confidence > cfg.confidence_threshold
    if not bool(keep.any()):
        return _empty("consistency_loss (no confident points)", strong_similarity)
    rows = unseen_idx[keep]
    value, grad = _cross_entropy(strong_similarity[rows], targets[keep], cfg.tau)
    return LossValue(value, _scatter_rows(grad, rows, strong_similarity))


@dataclass
class LossResult:
    value: float
    terms: Dict[str, float] = field(default_factory=dict)
    grad: Optional[torch.Tensor] = None
    strong_grad: Optional[torch.Tensor] = None


def total_loss(
    batch: Batch,
    cfg: LossConfig,
    weak_similarity: Optional[torch.Tensor] = None,
    strong_similarity: Optional[torch.Tensor] = None,
) -> LossResult:
    """L_s plus weight_u times the variant's second term.

    seen_plus_unknown_aware adds the unknown-aware loss, seen_plus_pseudo the
    pseudo-label loss and seen_plus_self the consistency loss (which needs
    the two augmented views). seen_only is L_s alone.
    """
    seen = seen_loss(batch, cfg)
    terms = {"seen": seen.value}
    value = seen.value
    grad = seen.grad.clone()
    strong_grad = None

    if cfg.variant == LossVariant.SEEN_ONLY:
        terms["total"] = value
        return LossResult(value, terms, grad)

    if cfg.variant == LossVariant.SEEN_PLUS_SELF:
        if weak_similarity is None or strong_similarity is None:
            raise ConfigurationError("seen_plus_self needs weak and strong view similarities")
        extra = consistency_loss(weak_similarity, strong_similarity, batch.unseen_idx, cfg)
        terms["self"] = extra.value
        strong_grad = cfg.weight_u * extra.grad
    else:
        if cfg.variant == LossVariant.SEEN_PLUS_PSEUDO:
            name, extra = "pseudo", pseudo_label_loss(batch, cfg)
        else:
            name, extra = "unknown_aware", unknown_aware_loss(batch, cfg)
        terms[name] = extra.value
        grad += cfg.weight_u * extra.grad
    value += cfg.weight_u * extra.value
    terms["total"] = value
    return LossResult(value, terms, grad, strong_grad)
