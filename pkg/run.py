"""
Entry point for the elliptic Cauchy regularization experiments.

This script configures logging and dispatches to the command-line
interface; see `python run.py --help`.
"""

import logging
import sys

from src.config.logging_config import setup_logging
from src.harness.cli import main

setup_logging()

logger = logging.getLogger(__name__)

if __name__ == "__main__":
    sys.exit(main())
