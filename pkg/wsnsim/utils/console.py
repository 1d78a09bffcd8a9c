"""
Console and logging utilities shared by the CLI and the simulation library.
"""

import io
import logging
from typing import Optional

from rich.console import Console as RichConsole
from rich.logging import RichHandler

from wsnsim.utils.config_helpers import get_log_level

LOGGER_ROOT = "wsnsim"


def get_console() -> RichConsole:
    """Get the Rich Console used for all user-facing output."""
    return RichConsole()


# Global console instance
console = get_console()


def get_recording_console(width: int = 120) -> RichConsole:
    """Console that renders into memory so reports can be exported as text."""
    return RichConsole(record=True, width=width, file=io.StringIO())


def configure_logging(level: Optional[str] = None) -> None:
    """Attach a RichHandler to the package logger.

    Safe to call repeatedly; the level is re-resolved each time so the CLI
    option can override WSNSIM_LOG_LEVEL.
    """
    root = logging.getLogger(LOGGER_ROOT)
    if not any(isinstance(h, RichHandler) for h in root.handlers):
        handler = RichHandler(
            console=RichConsole(stderr=True),
            show_path=False,
            rich_tracebacks=True,
        )
        handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
        root.addHandler(handler)
        root.propagate = False
    root.setLevel(get_log_level(level))


def get_logger(name: str) -> logging.Logger:
    """Logger below the `wsnsim` namespace, configured on first use."""
    root = logging.getLogger(LOGGER_ROOT)
    if not root.handlers:
        configure_logging()
    if name.startswith(LOGGER_ROOT):
        return logging.getLogger(name)
    return logging.getLogger(f"{LOGGER_ROOT}.{name}")
