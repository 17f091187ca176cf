"""Toolkit exception types, mapped onto CLI exit codes."""


class HarKitError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(HarKitError):
    """Invalid experiment configuration (CLI exit code 2).

    ``errors`` holds one message per offending field so that every
    problem is reported at once.
    """

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class DataError(HarKitError):
    """Missing or malformed input data (CLI exit code 3)."""


class NumericError(HarKitError):
    """Non-finite value encountered during training (CLI exit code 4)."""
