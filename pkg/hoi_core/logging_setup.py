# -*- coding: utf-8 -*-
"""
Console logging for entry points.

Library modules only call logging.getLogger(__name__); this module installs
the colored root handler once for the CLI and run_example.py.
"""

import logging

import colorlog

from .errors import ValidationError

LOG_FORMAT = "%(log_color)s%(asctime)s %(levelname)-8s%(reset)s %(name)s: %(message)s"
LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def configure_logging(level: str = "INFO") -> None:
    """Install a colorlog handler on the root logger (idempotent)."""
    if level.upper() not in LEVELS:
        raise ValidationError(f"unknown log level '{level}' (expected one of {', '.join(LEVELS)})")
    root = logging.getLogger()
    for handler in list(root.handlers):
        if getattr(handler, "_hoi_handler", False):
            root.removeHandler(handler)

    handler = colorlog.StreamHandler()
    handler.setFormatter(colorlog.ColoredFormatter(
        LOG_FORMAT,
        datefmt="%H:%M:%S",
        log_colors={
            "DEBUG": "cyan",
            "INFO": "green",
            "WARNING": "yellow",
            "ERROR": "red",
            "CRITICAL": "bold_red",
        },
    ))
    handler._hoi_handler = True
    root.addHandler(handler)
    root.setLevel(level.upper())
