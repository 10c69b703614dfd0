"""Shared exception types."""


class ToolkitError(ValueError):
    """Base class for all toolkit-raised errors."""


class FormatError(ToolkitError):
    """A wire-format file violated its schema; message carries path/line."""


class ConfigError(ToolkitError):
    """An invalid configuration value or combination."""
