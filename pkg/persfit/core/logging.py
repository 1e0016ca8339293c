"""
Logging configuration.

All diagnostics go to standard error through a single rich handler; standard
output is reserved for the machine-parsable result blocks of the CLI.
"""

import logging

from rich.console import Console
from rich.logging import RichHandler

ROOT_LOGGER = "persfit"

_handler: logging.Handler | None = None


def setup_logging(level: str = "WARNING") -> None:
    """
    Install the stderr rich handler on the ``persfit`` logger.

    Calling it again only changes the level.

    Args:
        level: Logging level name
    """
    global _handler

    root = logging.getLogger(ROOT_LOGGER)
    if _handler is None:
        _handler = RichHandler(
            console=Console(stderr=True),
            show_path=False,
            rich_tracebacks=False,
        )
        _handler.setFormatter(logging.Formatter("%(name)s - %(message)s"))
        root.addHandler(_handler)
        root.propagate = False
    root.setLevel(level.upper())


def get_logger(name: str) -> logging.Logger:
    """
    Get a logger under the ``persfit`` namespace.

    Args:
        name: Usually ``__name__`` of the calling module
    """
    if not name.startswith(ROOT_LOGGER):
        name = f"{ROOT_LOGGER}.{name}"
    return logging.getLogger(name)
