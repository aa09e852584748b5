"""Shared exception types.

Module-specific errors subclass :class:`CitegaugeError` so the CLI can map
them to exit codes uniformly (validation -> 1, I/O -> 2, network -> 3).
"""


class CitegaugeError(Exception):
    """Base class for all toolkit errors."""


class SchemaError(CitegaugeError):
    """Input file violates a declared schema (missing/duplicate field, wrong type)."""

    def __init__(self, message: str, location: str | None = None):
        self.location = location
        if location:
            message = f"{message} (at {location})"
        super().__init__(message)


class ValidationError(CitegaugeError):
    """A domain invariant is violated; the message names the invariant."""


class NetworkError(CitegaugeError):
    """A remote call failed after all retries were exhausted."""
