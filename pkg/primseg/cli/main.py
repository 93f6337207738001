#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

import argparse
import logging
import os
import sys
from datetime import datetime
from typing import Callable, Dict, List, Optional

import pandas as pd
import primseg.utils_logging as utils_logging
from primseg.benchmark import (
    AblationGrid,
    run_ablation_grid,
    SegmentationProblem,
    taxonomy_from_config,
)
from primseg.benchmark.problem import SPLIT_FILE, TAXONOMY_FILE
from primseg.config import Config
from primseg.exceptions import PrimsegError
from primseg.metrics import MetricsReport, write_table
from primseg.models.segmenter import ModelConfig
from primseg.objective import LossConfig
from primseg.scenegen.io import read_scene_dir, write_scene_dir, write_split
from primseg.scenegen.scene import generate_scenes, SceneConfig
from primseg.scenegen.taxonomy import mixture_matrix, SplitSpec, write_taxonomy
from primseg.semantics import embeddings_from_config, write_embeddings
from primseg.trainer import evaluate, load_checkpoint, save_checkpoint, train, TrainConfig
from primseg.verification import (
    all_passed,
    GradCheckConfig,
    reports_table,
    run_gradient_checks,
)

logger = utils_logging.getLogger(logging.INFO)

CHECKPOINT_FILE = "checkpoint.pt"
EMBEDDINGS_FILE = "embeddings.txt"


def parse_arguments(argv: Optional[List[str]] = None) -> argparse.Namespace:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", type=str, help="INI config file.")
    common.add_argument("--seed", type=int, help="Top-level seed (overrides [common] seed).")
    common.add_argument(
        "--out", type=str, help="Parent of the run directory (overrides [common] out_dir)."
    )
    common.add_argument(
        "--set",
        dest="overrides",
        metavar="SECTION.KEY=VALUE",
        action="append",
        default=[],
        help="Override a single config value; may be repeated.",
    )

    parser = argparse.ArgumentParser(
        description="Zero-shot point cloud segmentation with learnable geometric primitives."
    )
    sub_parsers = parser.add_subparsers(dest="command", required=True)
    sub_parsers.add_parser(
        "gen", parents=[common], help="Generate train/test scenes, taxonomy and split."
    )
    for name, help_text in (
        ("train", "Train a segmenter and score the test scenes."),
        ("ablate", "Train and score every cell of the ablation grid."),
    ):
        p = sub_parsers.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--scenes", type=str, help="Scene directory written by gen.")
    eval_parser = sub_parsers.add_parser(
        "eval", parents=[common], help="Score a checkpoint on test scenes."
    )
    eval_parser.add_argument("--checkpoint", type=str, help="Checkpoint written by train.")
    eval_parser.add_argument("--scenes", type=str, help="Scene directory written by gen.")
    sub_parsers.add_parser(
        "gradcheck", parents=[common], help="Finite-difference check of every backward pass."
    )
    return parser.parse_args(argv)


def load_config(args: argparse.Namespace) -> Config:
    """Config file, then --set overrides, then the dedicated flags; defaults applied."""
    config = Config(config_fnames=[args.config]) if args.config else Config()
    for assignment in args.overrides:
        config.set_override(assignment)
    if args.seed is not None:
        config.set_override(f"common.seed={args.seed}")
    if args.out is not None:
        config.set_override(f"common.out_dir={args.out}")
    if getattr(args, "scenes", None):
        config.set_override(f"data.scene_dir={args.scenes}")
    if getattr(args, "checkpoint", None):
        config.set_override(f"data.checkpoint={args.checkpoint}")
    return config.resolved()


def make_run_dir(config: Config, command: str) -> str:
    stamp = datetime.now().strftime("%Y%m%d-%H%M%S")
    base = os.path.join(
        config.get("common", "out_dir"), f"{command}_{stamp}_seed{config.get('common', 'seed')}"
    )
    run_dir, n = base, 0
    while os.path.exists(run_dir):
        n += 1
        run_dir = f"{base}_{n}"
    os.makedirs(run_dir)
    with open(os.path.join(run_dir, "config.ini"), "w") as f:
        f.write(str(config))
    return run_dir


def write_report(report: MetricsReport, split: SplitSpec, run_dir: str) -> None:
    """metrics.jsonl (full record), metrics.txt and per_class.{jsonl,txt}."""
    record = report.to_record()
    pd.DataFrame([record]).to_json(
        os.path.join(run_dir, "metrics.jsonl"), orient="records", lines=True
    )
    write_table(report.per_class_table(split), os.path.join(run_dir, "per_class"))
    scalars = ["miou_seen", "miou_unseen", "miou_all", "hiou", "overall_accuracy"]
    with open(os.path.join(run_dir, "metrics.txt"), "w") as f:
        for key in scalars:
            f.write(f"{key:<18}{record[key]:.4f}\n")
        f.write(f"{'absent_classes':<18}{', '.join(record['absent_classes']) or '-'}\n")
    logger.info(
        f"mIoU seen {report.miou_seen:.4f}, unseen {report.miou_unseen:.4f}, "
        f"hIoU {report.hiou:.4f}"
    )


def cmd_gen(config: Config, run_dir: str) -> int:
    templates, split = taxonomy_from_config(config)
    names = [t.name for t in templates]
    scene_cfg = SceneConfig.from_config(config)
    seed = config.getint("common", "seed")
    nproc = config.getint("scenegen", "nproc")
    for split_name, key in (("train", "n_train_scenes"), ("test", "n_test_scenes")):
        scenes = generate_scenes(
            templates, scene_cfg, seed, split_name, config.getint("scenegen", key), nproc
        )
        write_scene_dir(scenes, run_dir, split_name)
    write_taxonomy(templates, split, os.path.join(run_dir, TAXONOMY_FILE))
    write_split(split, names, os.path.join(run_dir, SPLIT_FILE))
    embeddings = embeddings_from_config(config, names, mixture_matrix(templates))
    write_embeddings(embeddings, os.path.join(run_dir, EMBEDDINGS_FILE))
    logger.info(f"Scenes, taxonomy, split and embeddings written to {run_dir}")
    return 0


def cmd_train(config: Config, run_dir: str) -> int:
    problem = SegmentationProblem.from_config(config)
    logger.info(f"Problem: {problem.metadata}")
    result = train(
        TrainConfig.from_config(config),
        problem.masked_train_scenes,
        problem.embeddings,
        problem.split,
    )
    save_checkpoint(result.checkpoint, os.path.join(run_dir, CHECKPOINT_FILE))
    result.epochs.to_csv(os.path.join(run_dir, "training_log.csv"), index=False)
    result.steps.to_csv(os.path.join(run_dir, "steps.csv"), index=False)
    write_report(evaluate(problem.test_scenes, result.checkpoint), problem.split, run_dir)
    return 0


def cmd_eval(config: Config, run_dir: str) -> int:
    path = config.get("data", "checkpoint")
    if not path:
        raise FileNotFoundError("eval needs a checkpoint (--checkpoint or [data] checkpoint)")
    checkpoint = load_checkpoint(path)
    scene_dir = config.get("data", "scene_dir")
    if scene_dir:
        scenes = read_scene_dir(scene_dir, "test")
    else:
        scenes = SegmentationProblem.from_config(config).test_scenes
    write_report(evaluate(scenes, checkpoint), checkpoint.split, run_dir)
    return 0


def cmd_gradcheck(config: Config, run_dir: str) -> int:
    reports = run_gradient_checks(
        GradCheckConfig.from_config(config),
        ModelConfig.from_config(config),
        LossConfig.from_config(config),
        seed=config.getint("common", "seed"),
    )
    write_table(reports_table(reports), os.path.join(run_dir, "gradcheck"))
    if all_passed(reports):
        logger.info(f"All {len(reports)} gradient checks passed")
        return 0
    failed = [name for name, r in reports.items() if not r.passed]
    logger.error(f"Gradient checks failed: {failed}")
    return 1


def cmd_ablate(config: Config, run_dir: str) -> int:
    problem = SegmentationProblem.from_config(config)
    runs, summary = run_ablation_grid(
        problem, config, AblationGrid.from_config(config), config.getint("ablation", "nproc")
    )
    write_table(runs, os.path.join(run_dir, "ablation_runs"))
    write_table(summary, os.path.join(run_dir, "ablation_summary"))
    logger.info("Ablation summary:\n" + summary.to_string(index=False))
    return 0 if (runs["status"] == "ok").all() else 1


COMMANDS: Dict[str, Callable[[Config, str], int]] = {
    "gen": cmd_gen,
    "train": cmd_train,
    "eval": cmd_eval,
    "gradcheck": cmd_gradcheck,
    "ablate": cmd_ablate,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = parse_arguments(argv)
    try:
        config = load_config(args)
        run_dir = make_run_dir(config, args.command)
        utils_logging.getLogger(config.get("common", "log_level"), run_dir)
        logger.info(f"primseg {args.command}: writing to {run_dir}")
        return COMMANDS[args.command](config, run_dir)
    except (PrimsegError, FileNotFoundError) as e:
        logger.error(f"{args.command} failed: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
