#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np
import torch
from primseg.exceptions import ConfigurationError
from primseg.numerics.params import ParamTensor, zero_grads

# loss_fn(True) must compute the loss AND accumulate analytic gradients into
# the parameters; loss_fn(False) only computes the loss.
LossFn = Callable[[bool], float]


@dataclass
class GradCheckReport:
    """Per-parameter worst relative error between analytic and numeric gradients."""

    tolerance: float
    step: float
    max_rel_error: Dict[str, float] = field(default_factory=dict)
    checked_entries: Dict[str, int] = field(default_factory=dict)
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    @property
    def worst(self) -> float:
        return max(self.max_rel_error.values(), default=0.0)

    def to_records(self, block: str = "") -> List[dict]:
        return [
            {
                "block": block,
                "param": name,
                "max_rel_error": err,
                "entries": self.checked_entries[name],
                "passed": name not in self.failures,
            }
            for name, err in self.max_rel_error.items()
        ]


def relative_error(analytic: float, numeric: float, floor: float = 1e-12) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def gradient_check(
    loss_fn: LossFn,
    params: List[ParamTensor],
    step: float = 1e-5,
    tolerance: float = 1e-4,
    max_entries: Optional[int] = 64,
    generator: Optional[np.random.Generator] = None,
    atol: float = 1e-6,
) -> GradCheckReport:
    """Compare analytic gradients against central finite differences.

    For every scalar entry (or a random subsample of max_entries entries for
    larger parameters) computes (f(x+h) - f(x-h)) / 2h and the relative error
    |a - n| / max(|a|, |n|, 1e-12). Entries whose analytic and numeric
    gradients are both below atol in magnitude are skipped: at h = 1e-5 a
    central difference of an O(1) loss carries about 1e-11 of round-off,
    which is already 1e-4 relative to a 1e-7 gradient.

    Args:
        loss_fn (LossFn): Deterministic loss, see LossFn.
        params (List[ParamTensor]): Parameters to check.
        step (float): Finite difference step h. Defaults to 1e-5.
        tolerance (float): Maximum allowed relative error. Defaults to 1e-4.
        max_entries (int, optional): Subsample cutoff per parameter. None checks all.
        generator (np.random.Generator, optional): Source for the subsample.
        atol (float): Magnitude below which both gradients count as zero.

    Returns:
        GradCheckReport: A report; failures are listed, never raised.
    """
    if step <= 0:
        raise ConfigurationError(f"finite difference step must be > 0, got {step}")
    generator = generator or np.random.default_rng(0)

    zero_grads(params)
    loss_fn(True)
    analytic = {p.name: p.grad.clone() for p in params}

    report = GradCheckReport(tolerance=tolerance, step=step)
    for p in params:
        flat = p.values.view(-1)
        n = flat.numel()
        if max_entries is not None and n > max_entries:
            idx = np.sort(generator.choice(n, size=max_entries, replace=False))
        else:
            idx = np.arange(n)
        worst = 0.0
        a_flat = analytic[p.name].view(-1)
        for i in idx:
            i = int(i)
            orig = float(flat[i])
            with torch.no_grad():
                flat[i] = orig + step
                f_plus = float(loss_fn(False))
                flat[i] = orig - step
                f_minus = float(loss_fn(False))
                flat[i] = orig
            num = (f_plus - f_minus) / (2 * step)
            a = float(a_flat[i])
            if abs(a) < atol and abs(num) < atol:
                continue
            worst = max(worst, relative_error(a, num))
        report.max_rel_error[p.name] = worst
        report.checked_entries[p.name] = len(idx)
        if worst > tolerance:
            report.failures.append(p.name)

    zero_grads(params)
    return report
