"""Logging configuration for quadtrack runs."""

import logging
import os
import sys
from pathlib import Path
from typing import Optional

DEFAULT_FORMAT = "[%(asctime)s] %(name)s [%(levelname)s] %(message)s"
LEVEL_ENV_VAR = "QUADTRACK_LOG_LEVEL"


def setup_logger(
    name: str,
    level: Optional[str] = None,
    log_file: Optional[Path] = None,
    format_string: Optional[str] = None,
) -> logging.Logger:
    """
    Set up a named logger writing to stdout and, optionally, to a run log file.

    Args:
        name: Logger name (command or tool name)
        level: Logging level; defaults to $QUADTRACK_LOG_LEVEL or INFO
        log_file: Optional file path, typically inside the run output directory
        format_string: Custom format string

    Returns:
        Configured logger
    """
    if level is None:
        level = os.getenv(LEVEL_ENV_VAR, "INFO")

    logger = logging.getLogger(name)
    logger.setLevel(getattr(logging, level.upper(), logging.INFO))
    logger.handlers = []

    formatter = logging.Formatter(format_string or DEFAULT_FORMAT, datefmt="%Y-%m-%d %H:%M:%S")

    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    if log_file:
        log_file = Path(log_file)
        log_file.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_file, encoding="utf-8")
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    # library loggers under "src." report through the same handlers
    library_logger = logging.getLogger("src")
    library_logger.setLevel(logger.level)
    library_logger.handlers = list(logger.handlers)
    library_logger.propagate = False

    return logger


def get_logger(name: str) -> logging.Logger:
    """Get existing logger or create default."""
    return logging.getLogger(name)
