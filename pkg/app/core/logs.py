"""Logging setup shared by the CLI and the tests."""

import logging
from typing import Optional

from app.config import get_settings
from app.errors import UsageError


def configure_logging(level: Optional[str] = None) -> None:
    """Configure the root logger once; later calls only change the level."""
    settings = get_settings()
    resolved = (level or settings.log_level).upper()
    if not isinstance(logging.getLevelName(resolved), int):
        raise UsageError(f"unknown log level {resolved!r}")
    root = logging.getLogger()
    if not root.handlers:
        logging.basicConfig(level=resolved, format=settings.log_format)
    root.setLevel(resolved)
