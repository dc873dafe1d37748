import logging
import os
from typing import Union

from rich.console import Console
from rich.logging import RichHandler

ROOT_LOGGER = "mimo_jrc"
LOGLEVEL_ENV = "MIMO_JRC_LOGLEVEL"


def get_logger(name: str) -> logging.Logger:
    """Logger with a RichHandler writing to stderr. Standard output is left to command results."""
    logger = logging.getLogger(name)
    logger.setLevel(level=os.environ.get(LOGLEVEL_ENV, "INFO"))
    formatter = logging.Formatter("{%(name)s:%(lineno)d} - %(message)s")
    if not logger.hasHandlers():
        ch = RichHandler(
            console=Console(stderr=True), show_level=True, show_time=False, show_path=False, rich_tracebacks=True
        )
        ch.setLevel(logging.DEBUG)
        ch.setFormatter(formatter)
        logger.addHandler(ch)
        logger.propagate = False
    return logger


def set_log_level(level: Union[int, str]) -> None:
    """Applies ``level`` to every package logger created so far."""
    for name, logger in logging.Logger.manager.loggerDict.items():
        if name.split(".")[0] == ROOT_LOGGER and isinstance(logger, logging.Logger):
            logger.setLevel(level)
