"""Console logging helpers.

Library modules log through ``logging.getLogger(__name__)``. Composite jobs
(demo, benchmark, pair evaluation) additionally accept a ``log`` callback so
callers can route progress lines wherever they like.
"""

from __future__ import annotations

import logging
import sys
from typing import Callable, Optional

LogFn = Optional[Callable[[str], None]]

_TAGS = {
    logging.DEBUG: "debug",
    logging.INFO: "info",
    logging.WARNING: "warn",
    logging.ERROR: "error",
    logging.CRITICAL: "error",
}


class BracketFormatter(logging.Formatter):
    """Render records as ``[info] message``."""

    def format(self, record: logging.LogRecord) -> str:
        tag = _TAGS.get(record.levelno, record.levelname.lower())
        return f"[{tag}] {record.getMessage()}"


def configure(verbosity: int = 0) -> logging.Logger:
    root = logging.getLogger("geoseg")
    level = logging.DEBUG if verbosity > 0 else logging.INFO
    root.setLevel(level)
    console = [h for h in root.handlers if getattr(h, "_geoseg_console", False)]
    if console:
        # stderr may have been swapped since the first call
        console[0].stream = sys.stderr  # type: ignore[attr-defined]
    else:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(BracketFormatter())
        handler._geoseg_console = True  # type: ignore[attr-defined]
        root.addHandler(handler)
    root.propagate = False
    return root


def emit(log: LogFn, message: str) -> None:
    if log is not None:
        log(message)


__all__ = ["BracketFormatter", "LogFn", "configure", "emit"]
