"""
Component-tagged console output.

Every record renders as ``[tag] message`` so that logs of a run can be
post-processed the same way regardless of which component wrote them.
"""

import logging
import os
import sys

_FORMAT = "[%(name)s] %(message)s"
_ROOT = "lbkit"
_configured = False


def _configure() -> None:
    global _configured
    if _configured:
        return
    handler = logging.StreamHandler(sys.stdout)
    handler.setFormatter(_TagFormatter(_FORMAT))
    root = logging.getLogger(_ROOT)
    root.addHandler(handler)
    root.setLevel(os.environ.get("LBKIT_LOG_LEVEL", "INFO").upper())
    root.propagate = False
    _configured = True


class _TagFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        # strip the package prefix so tags read like [prepareGeometry]
        name = record.name
        if name.startswith(_ROOT + "."):
            record.name = name[len(_ROOT) + 1:]
        try:
            return super().format(record)
        finally:
            record.name = name


def get_logger(tag: str) -> logging.Logger:
    """Logger whose output is prefixed with ``[tag]``."""
    _configure()
    return logging.getLogger(f"{_ROOT}.{tag}")


def set_level(level: str) -> None:
    _configure()
    logging.getLogger(_ROOT).setLevel(level.upper())
