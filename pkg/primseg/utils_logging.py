#!/usr/bin/env python3
# Copyright (c) Facebook, Inc. and its affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

import logging
import logging.config
import os
from typing import Optional, Union

from primseg.exceptions import ConfigurationError

LOGGER_NAME = "primseg"
LOG_FILE = "primseg.log"

logger = logging.getLogger(LOGGER_NAME)


def _level(level: Union[int, str]) -> int:
    if isinstance(level, int):
        return level
    value = logging.getLevelName(level.strip().upper())
    if not isinstance(value, int):
        raise ConfigurationError(f"unknown log level '{level}'")
    return value


def getLogger(
    level: Union[int, str] = logging.INFO, log_path: Optional[str] = None
) -> logging.Logger:
    """Configure and return the package logger.

    The console gets records at level and above. When log_path is given (a run
    directory), every record down to DEBUG, per-step loss terms included, also
    goes to <log_path>/primseg.log. Calling this again replaces the handlers.

    Args:
        level (int or str): Console level, e.g. logging.INFO or "debug".
        log_path (str, optional): Directory for the log file. Defaults to None,
            meaning console only.
    """
    handlers = {
        "default": {
            "level": _level(level),
            "class": "logging.StreamHandler",
            "formatter": "standard",
        },
    }
    if log_path is not None:
        os.makedirs(log_path, exist_ok=True)
        handlers["file"] = {
            "class": "logging.FileHandler",
            "level": logging.DEBUG,
            "filename": os.path.join(log_path, LOG_FILE),
            "formatter": "standard",
        }

    logging_config = {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "standard": {"format": "%(asctime)-15s [%(levelname)-7s] %(message)s"}
        },
        "handlers": handlers,
        "loggers": {
            LOGGER_NAME: {
                "handlers": list(handlers),
                "level": logging.DEBUG,
                "propagate": False,
            },
        },
    }

    logging.config.dictConfig(logging_config)
    return logger
