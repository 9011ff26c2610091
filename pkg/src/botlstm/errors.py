"""Shared exception types.

Every library error carries the name of the module it originated in so the
command-line layer can prefix messages and map failures onto documented
exit codes (1 usage, 2 data, 3 internal).
"""


class BotlstmError(Exception):
    """Base class for all errors raised by this package."""

    def __init__(self, message: str, module: str = "botlstm"):
        super().__init__(message)
        self.module = module


class DataError(BotlstmError):
    """A problem with user-supplied data: files, formats, or values."""


class CheckpointError(DataError):
    """A checkpoint file is unreadable, truncated, or fails its checksum."""

    def __init__(self, message: str, module: str = "cli"):
        super().__init__(message, module=module)


class UsageError(BotlstmError):
    """Bad command-line arguments or an inconsistent flag combination."""

    def __init__(self, message: str, module: str = "cli"):
        super().__init__(message, module=module)


class InternalError(BotlstmError):
    """An internal invariant was violated (e.g. a non-finite gradient)."""
