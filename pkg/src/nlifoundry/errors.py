"""Exception types shared across the pipeline stages."""

from __future__ import annotations


class FoundryError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(FoundryError):
    """Invalid configuration: bad ratios, duplicate phrases, vote counts..."""


class ParseError(FoundryError):
    """Malformed input stream; carries the approximate byte offset."""

    def __init__(self, message: str, byte_offset: int | None = None):
        if byte_offset is not None:
            message = f"{message} (byte offset {byte_offset})"
        super().__init__(message)
        self.byte_offset = byte_offset


class TruncationError(ParseError):
    """Input stream ended mid-record."""


class FormatError(FoundryError):
    """Malformed row in a data file; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
