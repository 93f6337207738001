#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

from __future__ import annotations

import logging
import time
import traceback
from dataclasses import dataclass, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import pandas as pd
import primseg.utils_logging as utils_logging
from primseg.config import Config
from primseg.exceptions import ConfigurationError
from primseg.objective import LossVariant
from primseg.trainer import evaluate, train, TrainConfig
from tqdm.contrib.itertools import product as tproduct

from .problem import SegmentationProblem

logger = utils_logging.getLogger(logging.INFO)

METRIC_COLUMNS = ["miou_seen", "miou_unseen", "miou_all", "hiou", "overall_accuracy"]

_VARIANT_SUFFIX = {
    LossVariant.SEEN_ONLY: "",
    LossVariant.SEEN_PLUS_PSEUDO: "+pseudo",
    LossVariant.SEEN_PLUS_SELF: "+self",
    LossVariant.SEEN_PLUS_UNKNOWN_AWARE: "+u",
}


@dataclass(frozen=True)
class AblationCell:
    """One row of the ablation table: a model shape and a loss variant.

    Cells without prototypes use the backbone feature directly as the visual
    representation. n_prototypes is None for them. A supervised cell trains on
    the unmasked labels of every class. A non-empty unseen replaces the
    problem's unseen classes for this cell.
    """

    name: str
    variant: LossVariant
    n_kernels: int = 1
    n_prototypes: Optional[int] = None
    supervised: bool = False
    unseen: Tuple[str, ...] = ()

    @property
    def use_prototypes(self) -> bool:
        return self.n_prototypes is not None

    def overrides(self) -> Dict[str, Dict[str, str]]:
        model = {
            "use_prototypes": str(self.use_prototypes).lower(),
            "n_kernels": str(self.n_kernels),
        }
        if self.n_prototypes is not None:
            model["n_prototypes"] = str(self.n_prototypes)
        return {"model": model, "loss": {"variant": self.variant.value}}

    def apply(self, config: Config, seed: Optional[int] = None) -> Config:
        """A new config: config plus this cell's overrides (and seed). config is untouched."""
        out = Config(config_dict=config.to_dict())
        out.update(config_dict=self.overrides())
        if seed is not None:
            out["common"]["seed"] = str(seed)
        return out

    def to_record(self) -> Dict[str, Any]:
        return {
            "cell": self.name,
            "variant": self.variant.value,
            "use_prototypes": self.use_prototypes,
            "n_prototypes": self.n_prototypes,
            "n_kernels": self.n_kernels,
            "supervised": self.supervised,
            "unseen": ",".join(self.unseen),
        }


@dataclass(frozen=True)
class AblationGrid:
    """Which cells to run and over which seeds.

    The grid holds, in order: a base row per variant (no prototypes, one
    kernel), the base+u rows with every kernel count, and the full model
    with every prototype count times every kernel count. With supervised set,
    a "supervised" row follows: the largest full model trained on unmasked
    labels, with the seen-only loss over all classes.

    Each entry of unseen_splits is a list of class names to hold out. When
    any are given, every row is repeated once per split and named
    <row>@<n>u, n being the number of unseen classes; rows of the first split
    come first. A non-empty cell_names keeps only the named cells; a bare row
    name keeps that row in every split.
    """

    variants: Tuple[LossVariant, ...] = tuple(LossVariant)
    kernel_counts: Tuple[int, ...] = (2, 4, 8, 16)
    prototype_counts: Tuple[int, ...] = (48, 96, 128)
    seeds: Tuple[int, ...] = (0, 1, 2)
    cell_names: Tuple[str, ...] = ()
    supervised: bool = False
    unseen_splits: Tuple[Tuple[str, ...], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "variants", tuple(LossVariant(v) for v in self.variants))
        object.__setattr__(
            self, "unseen_splits", tuple(tuple(names) for names in self.unseen_splits)
        )
        if not self.seeds:
            raise ConfigurationError("ablation needs at least one seed")
        for what, counts in (("kernel", self.kernel_counts), ("prototype", self.prototype_counts)):
            if any(c < 1 for c in counts):
                raise ConfigurationError(f"{what} counts must be >= 1, got {list(counts)}")
        if self.supervised and not (self.kernel_counts and self.prototype_counts):
            raise ConfigurationError(
                "the supervised row needs at least one kernel count and one prototype count"
            )
        sizes = [len(names) for names in self.unseen_splits]
        if any(n == 0 for n in sizes):
            raise ConfigurationError("an unseen split must name at least one class")
        if len(set(sizes)) != len(sizes):
            raise ConfigurationError(f"unseen splits must differ in size, got sizes {sizes}")
        all_cells = self._all_cells()
        known = [c.name for c in all_cells] + [c.name for c in self._rows()]
        unknown = [n for n in self.cell_names if n not in known]
        if unknown:
            raise ConfigurationError(
                f"unknown ablation cells {unknown}; known cells are {[c.name for c in all_cells]}"
            )

    def _rows(self) -> List[AblationCell]:
        cells = [AblationCell(f"base{_VARIANT_SUFFIX[v]}", v) for v in self.variants]
        u = LossVariant.SEEN_PLUS_UNKNOWN_AWARE
        cells += [AblationCell(f"base+u+mk{k}", u, n_kernels=k) for k in self.kernel_counts]
        cells += [
            AblationCell(f"gp{m}+mk{k}+u", u, n_kernels=k, n_prototypes=m)
            for m in self.prototype_counts
            for k in self.kernel_counts
        ]
        if self.supervised:
            cells.append(
                AblationCell(
                    "supervised",
                    LossVariant.SEEN_ONLY,
                    n_kernels=max(self.kernel_counts),
                    n_prototypes=max(self.prototype_counts),
                    supervised=True,
                )
            )
        return cells

    def _all_cells(self) -> List[AblationCell]:
        rows = self._rows()
        if not self.unseen_splits:
            return rows
        return [
            replace(c, name=f"{c.name}@{len(names)}u", unseen=names)
            for names in self.unseen_splits
            for c in rows
        ]

    @property
    def cells(self) -> List[AblationCell]:
        cells = self._all_cells()
        if self.cell_names:
            cells = [
                c for c in cells if c.name in self.cell_names or _row_name(c) in self.cell_names
            ]
        return cells

    @classmethod
    def from_config(cls, config: Config) -> AblationGrid:
        return cls(
            variants=tuple(config.getlist("ablation", "variants", element_type=str)),
            kernel_counts=tuple(config.getlist("ablation", "kernel_counts", element_type=int)),
            prototype_counts=tuple(
                config.getlist("ablation", "prototype_counts", element_type=int)
            ),
            seeds=tuple(config.getlist("ablation", "seeds", element_type=int)),
            cell_names=tuple(config.getlist("ablation", "cells", element_type=str)),
            supervised=config.getboolean("ablation", "supervised"),
            unseen_splits=parse_unseen_splits(config.get("ablation", "unseen_splits")),
        )


def _row_name(cell: AblationCell) -> str:
    return cell.name.split("@", 1)[0]


def parse_unseen_splits(raw: str) -> Tuple[Tuple[str, ...], ...]:
    """Parse "[sofa, desk] | [sofa, desk, lamp, cabinet]" into tuples of class names.

    Splits are separated by "|"; brackets around each split are optional.
    """
    splits = []
    for group in raw.split("|"):
        group = group.strip().strip("[]")
        names = tuple(n.strip() for n in group.split(",") if n.strip())
        if names:
            splits.append(names)
    return tuple(splits)


class Ablation:
    """Train and evaluate every cell of an AblationGrid on one SegmentationProblem.

    Every (seed, cell) run trains from the base config with the cell's
    overrides and the seed, then scores the problem's test scenes. A run that
    raises is logged with its traceback and recorded with status "failed";
    the remaining runs still go ahead.
    """

    def __init__(
        self, problem: SegmentationProblem, base_config: Config, grid: AblationGrid
    ) -> None:
        """Initialize the ablation.

        Args:
            problem (SegmentationProblem): Scenes, split and class vectors shared by every cell.
            base_config (Config): Settings every cell starts from.
            grid (AblationGrid): Cells and seeds to run.

        Raises:
            ConfigurationError: if a cell holds out a class the problem does not have.
        """
        self.problem = problem
        self.base_config = base_config
        self.grid = grid
        self._log: List[Dict[str, Any]] = []
        self._problems: Dict[Tuple[str, ...], SegmentationProblem] = {}
        for cell in grid.cells:
            self.problem_for(cell)

    def problem_for(self, cell: AblationCell) -> SegmentationProblem:
        """The problem with cell's unseen classes held out, or the shared problem."""
        if not cell.unseen:
            return self.problem
        if cell.unseen not in self._problems:
            self._problems[cell.unseen] = self.problem.with_unseen(cell.unseen)
        return self._problems[cell.unseen]

    @property
    def num_runs(self) -> int:
        return len(self.grid.cells) * len(self.grid.seeds)

    def run_cell(self, cell: AblationCell, seed: int) -> Dict[str, Any]:
        """Train and evaluate a single cell with a single seed.

        Returns:
            Dict[str, Any]: The cell description, seed, status and metrics.
        """
        record: Dict[str, Any] = {"seed": seed, **cell.to_record()}
        start = time.time()
        try:
            problem = self.problem_for(cell)
            train_config = TrainConfig.from_config(cell.apply(self.base_config, seed))
            scenes = problem.train_scenes if cell.supervised else problem.masked_train_scenes
            result = train(
                train_config,
                scenes,
                problem.embeddings,
                problem.split,
                supervised=cell.supervised,
            )
            report = evaluate(problem.test_scenes, result.checkpoint)
        except Exception as e:
            logger.error(
                f"Error on cell {cell.name} seed {seed}: {e}! "
                + f"Traceback follows:\n{traceback.format_exc()}"
            )
            record.update(status="failed", error=str(e))
            return record

        final_loss = float(result.steps["total"].iloc[-1]) if len(result.steps) else float("nan")
        record.update(
            status="ok",
            error="",
            final_loss=final_loss,
            train_seconds=time.time() - start,
            **{m: getattr(report, m) for m in METRIC_COLUMNS},
        )
        logger.info(
            f"cell {cell.name} seed {seed}: seen {report.miou_seen:.3f}, "
            f"unseen {report.miou_unseen:.3f}, hIoU {report.hiou:.3f}"
        )
        return record

    def run(self) -> None:
        """Run every cell for every seed, sequentially."""
        for seed, cell in tproduct(self.grid.seeds, self.grid.cells):
            self._log.append(self.run_cell(cell, seed))

    def pandas(self) -> pd.DataFrame:
        """Per-run records in grid order, then seed order."""
        df = pd.DataFrame(self._log)
        if df.empty:
            return df
        order = {c.name: i for i, c in enumerate(self.grid.cells)}
        df = df.assign(_order=df["cell"].map(order)).sort_values(["_order", "seed"])
        return df.drop(columns="_order").reset_index(drop=True)

    def summary(self) -> pd.DataFrame:
        return summarize(self.pandas(), [c.name for c in self.grid.cells])


def summarize(runs: pd.DataFrame, cell_order: Optional[Sequence[str]] = None) -> pd.DataFrame:
    """Mean and sample standard deviation of each metric per cell over successful seeds.

    Columns are cell, n_seeds, n_failed and <metric>_mean / <metric>_std for
    every metric. Cells whose runs all failed keep a row with NaN metrics.
    """
    if runs.empty:
        return pd.DataFrame(columns=["cell", "n_seeds", "n_failed"])
    cells = list(cell_order) if cell_order is not None else list(dict.fromkeys(runs["cell"]))
    rows = []
    for name in cells:
        group = runs[runs["cell"] == name]
        if group.empty:
            continue
        ok = group[group["status"] == "ok"]
        row: Dict[str, Any] = {
            "cell": name,
            "n_seeds": len(ok),
            "n_failed": int((group["status"] != "ok").sum()),
        }
        for m in METRIC_COLUMNS:
            values = ok[m].astype(float) if m in ok else pd.Series(dtype=float)
            row[f"{m}_mean"] = values.mean()
            row[f"{m}_std"] = values.std()
        rows.append(row)
    return pd.DataFrame(rows)
