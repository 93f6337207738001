#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from primseg.exceptions import ConfigurationError
from primseg.scenegen.scene import UNLABELED
from primseg.scenegen.taxonomy import SplitSpec
from sklearn.metrics import confusion_matrix


def hiou(miou_seen: float, miou_unseen: float) -> float:
    """Harmonic mean of seen and unseen mIoU; 0 when both are 0."""
    total = miou_seen + miou_unseen
    if total == 0:
        return 0.0
    return 2 * miou_seen * miou_unseen / total


@dataclass
class MetricsReport:
    """Segmentation quality over a set of points.

    IoUs are fractions in [0, 1]. Classes that appear in neither the
    predictions nor the ground truth are listed in absent_classes, get an IoU
    of 0 and are left out of every mean.
    """

    per_class_iou: np.ndarray
    miou_seen: float
    miou_unseen: float
    miou_all: float
    hiou: float
    confusion: np.ndarray
    overall_accuracy: float
    absent_classes: List[int] = field(default_factory=list)
    class_names: Optional[List[str]] = None

    def to_record(self) -> Dict[str, Any]:
        names = self.class_names or [str(c) for c in range(len(self.per_class_iou))]
        return {
            "miou_seen": self.miou_seen,
            "miou_unseen": self.miou_unseen,
            "miou_all": self.miou_all,
            "hiou": self.hiou,
            "overall_accuracy": self.overall_accuracy,
            "absent_classes": [names[c] for c in self.absent_classes],
            "per_class_iou": dict(zip(names, self.per_class_iou.tolist())),
            "confusion": self.confusion.tolist(),
        }

    def per_class_table(self, split: SplitSpec) -> pd.DataFrame:
        names = self.class_names or [str(c) for c in range(len(self.per_class_iou))]
        return pd.DataFrame(
            {
                "class": names,
                "split": ["unseen" if c in split.unseen else "seen" for c in range(len(names))],
                "iou": self.per_class_iou,
                "gt_points": self.confusion.sum(axis=1),
                "absent": [c in self.absent_classes for c in range(len(names))],
            }
        )


def _mean_over(iou: np.ndarray, classes: Sequence[int], absent: Sequence[int]) -> float:
    kept = [c for c in classes if c not in absent]
    if not kept:
        return 0.0
    return float(np.mean(iou[kept]))


def compute_metrics(
    predictions: np.ndarray,
    ground_truth: np.ndarray,
    split: SplitSpec,
    class_names: Optional[Sequence[str]] = None,
) -> MetricsReport:
    """IoU per class, seen/unseen/all mIoU and hIoU.

    Args:
        predictions (np.ndarray): Predicted class id per point.
        ground_truth (np.ndarray): True class id per point; must not be masked.
        split (SplitSpec): Seen/unseen partition of the classes.
        class_names (Sequence[str], optional): For reporting.

    Returns:
        MetricsReport: Confusion rows are ground truth, columns predictions.
    """
    predictions = np.asarray(predictions, dtype=np.int64)
    ground_truth = np.asarray(ground_truth, dtype=np.int64)
    if predictions.shape != ground_truth.shape:
        raise ConfigurationError(
            f"{predictions.shape[0]} predictions but {ground_truth.shape[0]} ground-truth labels"
        )
    if (ground_truth == UNLABELED).any():
        raise ConfigurationError(
            "ground truth contains UNLABELED points; evaluate on unmasked scenes"
        )
    n_classes = split.class_count
    for what, arr in (("prediction", predictions), ("ground truth", ground_truth)):
        if arr.size and (arr.min() < 0 or arr.max() >= n_classes):
            raise ConfigurationError(f"{what} ids must lie in [0, {n_classes})")

    confusion = confusion_matrix(ground_truth, predictions, labels=np.arange(n_classes))
    tp = np.diag(confusion).astype(np.float64)
    denom = confusion.sum(axis=0) + confusion.sum(axis=1) - tp
    absent = [int(c) for c in np.flatnonzero(denom == 0)]
    iou = np.divide(tp, denom, out=np.zeros(n_classes), where=denom > 0)

    miou_seen = _mean_over(iou, split.seen_ids, absent)
    miou_unseen = _mean_over(iou, split.unseen_ids, absent)
    total = confusion.sum()
    return MetricsReport(
        per_class_iou=iou,
        miou_seen=miou_seen,
        miou_unseen=miou_unseen,
        miou_all=_mean_over(iou, range(n_classes), absent),
        hiou=hiou(miou_seen, miou_unseen),
        confusion=confusion,
        overall_accuracy=float(tp.sum() / total) if total else 0.0,
        absent_classes=absent,
        class_names=list(class_names) if class_names is not None else None,
    )


def write_table(df: pd.DataFrame, stem: str) -> Tuple[str, str]:
    """Write df as line-delimited JSON records and as an aligned text table.

    Returns:
        Tuple[str, str]: Paths of <stem>.jsonl and <stem>.txt.
    """
    jsonl, txt = f"{stem}.jsonl", f"{stem}.txt"
    df.to_json(jsonl, orient="records", lines=True)
    with open(txt, "w") as f:
        f.write(df.to_string(index=False, float_format=lambda v: f"{v:.4f}"))
        f.write("\n")
    return jsonl, txt
