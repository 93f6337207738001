#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, NamedTuple, Optional, Sequence

import numpy as np
import pandas as pd
import primseg.utils_logging as utils_logging
import torch
from primseg.config import Config
from primseg.exceptions import CheckpointError, ConfigurationError, NumericError
from primseg.metrics import compute_metrics, MetricsReport
from primseg.models.descriptors import DescriptorStandardizer, point_descriptor
from primseg.models.segmenter import ModelConfig, Segmenter
from primseg.numerics.checkpoint import read_tensors, write_tensors
from primseg.numerics.ops import log_softmax
from primseg.numerics.optim import Adam
from primseg.numerics.params import ComputeConfig
from primseg.objective import Batch, LossConfig, LossVariant, total_loss
from primseg.scenegen.scene import AugmentStrength, augment_scene, Scene, UNLABELED
from primseg.scenegen.taxonomy import SplitSpec
from primseg.semantics import EmbeddingSource, EmbeddingTable
from primseg.utils import numpy_rng

logger = utils_logging.getLogger(logging.INFO)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 300
    batch_scenes: int = 8
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    model: ModelConfig = field(default_factory=ModelConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    weak: AugmentStrength = field(default_factory=AugmentStrength)
    strong: AugmentStrength = field(
        default_factory=lambda: AugmentStrength((-0.5, 0.5), 0.01, (0.9, 1.1))
    )
    compute: ComputeConfig = field(default_factory=ComputeConfig)

    def __post_init__(self):
        if self.epochs < 0 or self.batch_scenes < 1:
            raise ConfigurationError(
                f"need epochs >= 0 and batch_scenes >= 1, got {self.epochs}, {self.batch_scenes}"
            )
        if self.lr <= 0:
            raise ConfigurationError(f"lr must be > 0, got {self.lr}")

    @property
    def seed(self) -> int:
        return self.compute.seed

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_config(cls, config: Config) -> TrainConfig:
        return cls(
            epochs=config.getint("train", "epochs"),
            batch_scenes=config.getint("train", "batch_scenes"),
            lr=config.getfloat("train", "lr"),
            beta1=config.getfloat("train", "beta1"),
            beta2=config.getfloat("train", "beta2"),
            eps=config.getfloat("train", "eps"),
            model=ModelConfig.from_config(config),
            loss=LossConfig.from_config(config),
            weak=AugmentStrength.from_config(config, "weak"),
            strong=AugmentStrength.from_config(config, "strong"),
            compute=ComputeConfig.from_config(config),
        )


@dataclass
class Checkpoint:
    """A trained segmenter plus everything needed to run it on new scenes."""

    model: Segmenter
    embeddings: EmbeddingTable
    split: SplitSpec
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def class_names(self) -> List[str]:
        return self.embeddings.class_names


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    epochs: pd.DataFrame
    steps: pd.DataFrame


class _SceneRows(NamedTuple):
    scene: Scene
    descriptors: torch.Tensor
    seen_idx: np.ndarray
    seen_labels: np.ndarray
    unseen_idx: np.ndarray


def _check_transductive(scenes: Sequence[Scene], split: SplitSpec) -> None:
    for i, scene in enumerate(scenes):
        leaked = np.isin(scene.labels, split.unseen_ids)
        if leaked.any():
            raise ConfigurationError(
                f"training scene {i} still has {int(leaked.sum())} unseen-class labels; "
                "mask them with mask_unseen_labels first"
            )


def _batch_tensors(rows: Sequence[_SceneRows]):
    offsets = np.cumsum([0] + [r.descriptors.shape[0] for r in rows])
    seen_idx = np.concatenate([r.seen_idx + o for r, o in zip(rows, offsets)])
    seen_labels = np.concatenate([r.seen_labels for r in rows])
    unseen_idx = np.concatenate([r.unseen_idx + o for r, o in zip(rows, offsets)])
    return torch.cat([r.descriptors for r in rows]), seen_idx, seen_labels, unseen_idx


def _augmented(
    model: Segmenter,
    rows: Sequence[_SceneRows],
    members: Sequence[int],
    strength: AugmentStrength,
    seed: int,
    view: str,
    step: int,
) -> torch.Tensor:
    views = []
    for r, index in zip(rows, members):
        scene = augment_scene(r.scene, strength, numpy_rng(seed, "augment", view, step, index))
        views.append(model.standardize(point_descriptor(scene, model.config.k_neighbors)))
    return torch.cat(views)


def train(
    config: TrainConfig,
    scenes: Sequence[Scene],
    embeddings: EmbeddingTable,
    split: SplitSpec,
    eval_scenes: Optional[Sequence[Scene]] = None,
    supervised: bool = False,
) -> TrainResult:
    """Fit a segmenter on label-masked scenes.

    Each step concatenates batch_scenes scenes into one Batch: labeled points
    go to the seen rows, UNLABELED points to the unseen rows. Scene order is
    reshuffled every epoch from the seed.

    Args:
        config (TrainConfig): Optimization, model and loss settings.
        scenes (Sequence[Scene]): Training scenes, already masked.
        embeddings (EmbeddingTable): One word vector per class.
        split (SplitSpec): Seen/unseen partition.
        eval_scenes (Sequence[Scene], optional): Unmasked scenes scored after
            every epoch; their metrics are added to the epoch log.
        supervised (bool, optional): Train on unmasked scenes with every class
            treated as seen. Gives the fully supervised reference row; the
            checkpoint still reports metrics under split. Defaults to False.

    Returns:
        TrainResult: Checkpoint, per-epoch log and per-step log.
    """
    if not scenes:
        raise ConfigurationError("train needs at least one scene")
    class_count = len(embeddings.class_names)
    split.validate(class_count)
    for i, scene in enumerate(scenes):
        if scene.class_count != class_count:
            raise ConfigurationError(
                f"scene {i} has class_count {scene.class_count}, embeddings have {class_count}"
            )
    if supervised:
        loss_split = SplitSpec(seen=frozenset(range(class_count)), unseen=frozenset())
    else:
        _check_transductive(scenes, split)
        loss_split = split

    compute = config.compute
    compute.apply()
    k = config.model.k_neighbors
    raw = [point_descriptor(s, k) for s in scenes]
    standardizer = DescriptorStandardizer.fit(raw)
    model = Segmenter(config.model, embeddings.dim, compute, standardizer)
    emb = embeddings.as_tensor(compute.dtype)
    rows = [
        _SceneRows(
            scene=s,
            descriptors=model.standardize(d),
            seen_idx=np.flatnonzero(s.labels != UNLABELED),
            seen_labels=s.labels[s.labels != UNLABELED],
            unseen_idx=np.flatnonzero(s.labels == UNLABELED),
        )
        for s, d in zip(scenes, raw)
    ]
    optimizer = Adam(model.parameters(), config.lr, config.beta1, config.beta2, config.eps)
    self_training = config.loss.variant == LossVariant.SEEN_PLUS_SELF
    logger.info(
        f"Training on {len(scenes)} scenes, {sum(s.n_points for s in scenes)} points, "
        f"variant {config.loss.variant.value}, {config.epochs} epochs"
    )

    step = 0
    step_log: List[Dict[str, Any]] = []
    epoch_log: List[Dict[str, Any]] = []
    n_batches = math.ceil(len(rows) / config.batch_scenes)
    for epoch in range(config.epochs):
        order = numpy_rng(config.seed, "order", epoch).permutation(len(rows))
        for b in range(n_batches):
            members = order[b * config.batch_scenes : (b + 1) * config.batch_scenes]
            chosen = [rows[i] for i in members]
            desc, seen_idx, seen_labels, unseen_idx = _batch_tensors(chosen)
            d, cache = model.forward(desc, emb)
            batch = Batch(d, seen_idx, seen_labels, unseen_idx, loss_split)

            weak_d = strong_d = strong_cache = None
            if self_training:
                weak_d, _ = model.forward(
                    _augmented(model, chosen, members, config.weak, config.seed, "weak", step),
                    emb,
                )
                strong_d, strong_cache = model.forward(
                    _augmented(model, chosen, members, config.strong, config.seed, "strong", step),
                    emb,
                )
            result = total_loss(batch, config.loss, weak_d, strong_d)
            if not math.isfinite(result.value):
                raise NumericError(f"non-finite loss {result.value} at step {step} (epoch {epoch})")

            model.backward(result.grad, cache)
            if result.strong_grad is not None:
                model.backward(result.strong_grad, strong_cache)
            optimizer.step()
            optimizer.zero_grad()

            record = {"epoch": epoch, "step": step, **result.terms}
            logger.debug("step %d: %s", step, result.terms)
            step_log.append(record)
            step += 1

        summary = pd.DataFrame(step_log[-n_batches:]).drop(columns=["step"]).mean().to_dict()
        summary["epoch"] = epoch
        if eval_scenes:
            report = evaluate(eval_scenes, Checkpoint(model, embeddings, split))
            summary.update(
                miou_seen=report.miou_seen, miou_unseen=report.miou_unseen, hiou=report.hiou
            )
        logger.info(
            "epoch %d: %s",
            epoch,
            ", ".join(f"{k}={v:.4g}" for k, v in summary.items() if k != "epoch"),
        )
        epoch_log.append(summary)

    metadata = {
        "model": config.model.to_dict(),
        "precision": compute.precision,
        "seed": int(compute.seed),
        "deterministic": bool(compute.deterministic),
        "variant": config.loss.variant.value,
        "epochs": config.epochs,
        "steps": step,
        "supervised": supervised,
    }
    checkpoint = Checkpoint(model, embeddings, split, metadata)
    return TrainResult(checkpoint, pd.DataFrame(epoch_log), pd.DataFrame(step_log))


def save_checkpoint(checkpoint: Checkpoint, path: str) -> None:
    tensors = dict(checkpoint.model.state_tensors())
    tensors["embeddings"] = torch.tensor(checkpoint.embeddings.vectors)
    metadata = dict(checkpoint.metadata)
    metadata.update(
        class_names=list(checkpoint.class_names),
        seen=checkpoint.split.seen_ids,
        unseen=checkpoint.split.unseen_ids,
        embedding_source=checkpoint.embeddings.source.value,
        model=checkpoint.model.config.to_dict(),
        precision=checkpoint.model.compute.precision,
    )
    write_tensors(path, tensors, metadata)


def load_checkpoint(path: str, model_config: Optional[ModelConfig] = None) -> Checkpoint:
    """Restore a checkpoint bit-exactly.

    Args:
        path (str): Checkpoint file.
        model_config (ModelConfig, optional): Dims to validate against. Defaults
            to the dims stored in the checkpoint.

    Raises:
        CheckpointError: on a truncated file, a format version mismatch, or a
            tensor whose shape does not fit model_config (naming the tensor).
    """
    tensors, metadata = read_tensors(path)
    try:
        stored_config = ModelConfig(**metadata["model"])
        class_names = list(metadata["class_names"])
        split = SplitSpec(seen=frozenset(metadata["seen"]), unseen=frozenset(metadata["unseen"]))
        precision = metadata["precision"]
        emb = tensors.pop("embeddings")
    except (KeyError, TypeError) as e:
        raise CheckpointError(f"{path} is missing checkpoint metadata: {e}") from e

    embeddings = EmbeddingTable(
        class_names, emb.numpy(), EmbeddingSource(metadata.get("embedding_source", "file"))
    )
    compute = ComputeConfig(precision=precision, seed=int(metadata.get("seed", 0)))
    model = Segmenter(model_config or stored_config, embeddings.dim, compute)
    model.load_state(tensors)
    return Checkpoint(model, embeddings, split, metadata)


def predict_labels(similarity: torch.Tensor) -> np.ndarray:
    """Row-wise argmax of a similarity matrix; ties go to the lowest class id."""
    return np.argmax(similarity.detach().numpy(), axis=1).astype(np.int64)


@dataclass
class Prediction:
    labels: np.ndarray
    scores: np.ndarray


def infer_scene(scene: Scene, checkpoint: Checkpoint) -> Prediction:
    """Predict every point's class as the argmax of its similarity row.

    The argmax of D equals the argmax of softmax(D), so the softmax is only
    computed for the returned scores. Ties go to the lowest class id.
    """
    class_count = len(checkpoint.class_names)
    if scene.class_count != class_count:
        raise ConfigurationError(
            f"scene has {scene.class_count} classes, checkpoint has {class_count}"
        )
    model = checkpoint.model
    desc = model.standardize(point_descriptor(scene, model.config.k_neighbors))
    emb = checkpoint.embeddings.as_tensor(model.compute.dtype)
    d, _ = model.forward(desc, emb)
    scores = torch.exp(log_softmax(d)).numpy()
    return Prediction(labels=predict_labels(d), scores=scores)


def evaluate(scenes: Sequence[Scene], checkpoint: Checkpoint) -> MetricsReport:
    """Metrics over all points of unmasked scenes."""
    predictions = [infer_scene(s, checkpoint).labels for s in scenes]
    return compute_metrics(
        np.concatenate(predictions),
        np.concatenate([s.labels for s in scenes]),
        checkpoint.split,
        checkpoint.class_names,
    )
