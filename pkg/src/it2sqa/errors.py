"""Exception hierarchy shared across the package.

Validation errors map to CLI exit code 2, everything else to exit code 1.
"""


class ValidationError(Exception):
    """Invalid user input: bad flag values, malformed files, bad configs."""


class CorpusFormatError(ValidationError):
    """A corpus or raw-signal CSV failed validation.

    The message always names the offending row number (1-based, header
    included) so the caller can report it.
    """

    def __init__(self, message: str, row: int | None = None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class ConfigError(ValidationError):
    """A config file or mapping contained unknown keys or bad values."""


class PipelineError(Exception):
    """A run failed at runtime after inputs validated."""
