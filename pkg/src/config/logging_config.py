"""Configuration module for application logging.

Console output is kept at INFO (or DEBUG with --verbose) while every run
also writes a rotating DEBUG log, one file per start, under LOGS_DIR.
Per-sweep Picard residuals are DEBUG records and therefore only reach the
file unless the console level is lowered.
"""

import logging
import logging.config
import os
import sys
from datetime import datetime
from typing import Any, Dict

from src.config.config import LOGS_DIR

CONSOLE_FORMAT = "%(asctime)s - %(levelname)s - %(name)s - %(message)s"
FILE_FORMAT = "%(asctime)s - %(levelname)s - [%(filename)s:%(lineno)d] - %(message)s"


def build_logging_config(console_level: str, log_file: str) -> Dict[str, Any]:
    """
    The dictConfig document for one run.

    Args:
        console_level (str): Threshold of the console handler.
        log_file (str): Path of the rotating DEBUG log.

    Returns:
        Dict[str, Any]: Configuration accepted by logging.config.dictConfig.
    """
    return {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "console": {"format": CONSOLE_FORMAT, "datefmt": "%H:%M:%S"},
            "file": {"format": FILE_FORMAT, "datefmt": "%Y-%m-%d %H:%M:%S"},
        },
        "handlers": {
            "console": {
                "class": "logging.StreamHandler",
                "level": console_level,
                "formatter": "console",
                "stream": sys.stderr,
            },
            "file": {
                "class": "logging.handlers.RotatingFileHandler",
                "level": "DEBUG",
                "formatter": "file",
                "filename": log_file,
                "maxBytes": 10_485_760,  # 10MB
                "backupCount": 5,
                "encoding": "utf8",
            },
        },
        "loggers": {
            "": {"handlers": ["console", "file"], "level": "DEBUG"},
        },
    }


def setup_logging(console_level: str = "INFO") -> str:
    """
    Creates the log directory and applies the logging configuration.

    Args:
        console_level (str): Threshold for the console handler.

    Returns:
        str: Path of this run's log file.
    """
    log_dir = os.path.join(*LOGS_DIR)
    os.makedirs(log_dir, exist_ok=True)
    started = datetime.now().strftime("%Y%m%d_%H%M%S")
    log_file = os.path.join(log_dir, f"cauchy_{started}.log")
    logging.config.dictConfig(build_logging_config(console_level, log_file))
    return log_file


def set_console_level(console_level: str) -> None:
    """
    Changes the threshold of the configured console handler in place.

    Leaves the file handler and its log file untouched; configures logging
    from scratch when no console handler is installed yet.

    Args:
        console_level (str): New threshold for the console handler.
    """
    consoles = [
        handler
        for handler in logging.getLogger().handlers
        if handler.get_name() == "console"
    ]
    if not consoles:
        setup_logging(console_level)
        return
    for handler in consoles:
        handler.setLevel(console_level)
