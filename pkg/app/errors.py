"""
Error hierarchy.

Every error carries the process exit code the CLI reports for it.
"""

from typing import Optional


class DrcNetError(Exception):
    """Base class for all expected failures."""
    exit_code: int = 2


class UsageError(DrcNetError):
    """Bad command line or missing input file."""
    exit_code = 1


class ConfigError(DrcNetError):
    """A configuration file or value violates its constraints."""


class LayoutParseError(DrcNetError):
    """A document is not well-formed JSON."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class SchemaError(DrcNetError):
    """A document is valid JSON but does not follow the schema."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class LayoutValidationError(DrcNetError):
    """A document follows the schema but breaks a layout invariant."""

    def __init__(self, entity: str, message: str):
        super().__init__(f"{entity}: {message}")
        self.entity = entity


class GenerationError(DrcNetError):
    """The synthetic generator cannot produce a usable design."""


class DimensionError(DrcNetError):
    """Array shapes or feature widths do not match."""


class ModelFormatError(DrcNetError):
    """A model file is corrupted, truncated or of another version."""


class DataError(DrcNetError):
    """Input data cannot be used (empty, non-finite, degenerate)."""


class UndefinedMetricError(DrcNetError):
    """A metric is undefined because one class is absent."""
    exit_code = 3

    def __init__(self, message: str, subset: Optional[str] = None):
        super().__init__(message if subset is None else f"{subset}: {message}")
        self.subset = subset
