"""
Enhanced logging configuration for the compiler toolkit.
Logs go to stderr so stdout carries only reports; repeated warnings from
recursive synthesis are collapsed.
"""

import logging
import sys
from typing import Optional


class RepeatedMessageFilter(logging.Filter):
    """Drop a warning identical to one already emitted by the same logger."""

    def __init__(self, max_repeats: int = 1):
        super().__init__()
        self.max_repeats = max_repeats
        self.seen = {}

    def filter(self, record):
        if record.levelno < logging.WARNING:
            return True
        key = (record.name, record.levelno, record.getMessage())
        count = self.seen.get(key, 0) + 1
        self.seen[key] = count
        return count <= self.max_repeats


class SynthesisLogFormatter(logging.Formatter):
    """Custom formatter for structured synthesis logging."""

    def format(self, record):
        message = record.getMessage()
        if hasattr(record, "target") and hasattr(record, "stage"):
            message = f"[{record.target}@{record.stage}] {message}"
        elif hasattr(record, "stage"):
            message = f"[{record.stage}] {message}"
        elif hasattr(record, "target"):
            message = f"[Target:{record.target}] {message}"
        record.msg, record.args = message, None
        return super().format(record)


def setup_enhanced_logging(level: Optional[int] = None, quiet: bool = False) -> logging.Logger:
    """
    Setup enhanced logging configuration.

    Args:
        level: root level; defaults to INFO
        quiet: raise the root and package levels to WARNING

    Returns:
        The configured root logger
    """
    if level is None:
        level = logging.WARNING if quiet else logging.INFO

    formatter = SynthesisLogFormatter(
        fmt="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )

    root_logger = logging.getLogger()
    root_logger.setLevel(level)

    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    console_handler.addFilter(RepeatedMessageFilter())
    root_logger.addHandler(console_handler)

    # Numerical kernels only report problems unless debugging
    logging.getLogger("src.core").setLevel(level if level <= logging.DEBUG else max(logging.WARNING, level))

    # Synthesis and CLI progress
    logging.getLogger("src.control").setLevel(level)
    logging.getLogger("src.cli").setLevel(level)

    return root_logger
