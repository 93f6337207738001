#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

import logging
from typing import Any, Dict, Tuple

import multiprocess.context as ctx
import pandas as pd
import pathos
import primseg.utils_logging as utils_logging
import torch
from primseg.benchmark.ablation import Ablation, AblationGrid
from primseg.benchmark.problem import SegmentationProblem
from primseg.config import Config
from primseg.exceptions import ConfigurationError

ctx._force_start_method("spawn")

logger = utils_logging.getLogger(logging.INFO)


class PathosAblation(Ablation):
    """Ablation that runs its (seed, cell) jobs in parallel using pathos."""

    def __init__(self, nproc: int = 1, *args, **kwargs):
        """Initialize pathos ablation.

        Args:
            nproc (int, optional): Number of worker processes. Defaults to 1.
        """
        super().__init__(*args, **kwargs)

        # parallelize over cells, so each cell must train on a single thread
        if torch.get_num_threads() > 1 or torch.get_num_interop_threads() > 1:
            raise ConfigurationError(
                "PathosAblation parallelizes over processes, "
                + "and as such is incompatible with torch being threaded. "
                + "Please call `torch.set_num_threads(1)` and "
                + "`torch.set_num_interop_threads(1)` before using PathosAblation!"
            )
        cores_available = pathos.multiprocessing.cpu_count()
        if nproc >= cores_available:
            raise ConfigurationError(
                f"Requesting an ablation with {nproc} processes but "
                + f"machine has {cores_available} cores! Leave at least one core free."
            )
        self.pool = pathos.pools.ProcessPool(nodes=nproc)
        self.futures: list = []

    def __del__(self):
        # the GC may already have cleared the underlying pool
        if hasattr(self, "pool") and self.pool is not None:
            try:
                self.pool.close()
                self.pool.join()
                self.pool.clear()
            except TypeError:
                pass

    def __getstate__(self) -> Dict[str, Any]:
        self_dict = self.__dict__.copy()
        self_dict.pop("pool", None)
        self_dict.pop("futures", None)
        return self_dict

    def run(self) -> None:
        """Run every job and block until all are collected."""
        self.start()
        self.collate(wait=True)

    def start(self) -> None:
        """Submit every (seed, cell) job without blocking."""
        self.futures = [
            self.pool.apipe(self.run_cell, cell, seed)
            for seed in self.grid.seeds
            for cell in self.grid.cells
        ]
        logger.info(f"Submitted {len(self.futures)} ablation runs")

    @property
    def is_done(self) -> bool:
        return len(self.futures) == 0

    def collate(self, wait: bool = False) -> None:
        """Move finished results into the log.

        Args:
            wait (bool, optional): Block on every outstanding job. Defaults to False.
        """
        pending = []
        while self.futures:
            item = self.futures.pop()
            if wait or item.ready():
                self._log.append(item.get())
            else:
                pending.append(item)
        self.futures = pending


def run_ablation_grid(
    problem: SegmentationProblem, base_config: Config, grid: AblationGrid, nproc: int = 1
) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """Train and score every cell of grid over its seeds.

    With nproc > 1 the runs go to a PathosAblation, after pinning torch to a
    single thread in this process.

    Returns:
        Tuple[pd.DataFrame, pd.DataFrame]: Per-run records and the per-cell summary.
    """
    ablation: Ablation
    if nproc > 1:
        torch.set_num_threads(1)
        try:
            torch.set_num_interop_threads(1)
        except RuntimeError:
            pass  # already set once in this process
        ablation = PathosAblation(nproc, problem, base_config, grid)
    else:
        ablation = Ablation(problem, base_config, grid)
    logger.info(f"Running {ablation.num_runs} ablation runs over {len(grid.cells)} cells")
    ablation.run()
    return ablation.pandas(), ablation.summary()
