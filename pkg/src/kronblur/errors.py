"""Error taxonomy shared by the library, the service, and the CLI.

Every failure surfaced to a caller is one of four kinds so that the
service can map it to an HTTP error envelope and the CLI to an exit
code without inspecting messages.
"""

from __future__ import annotations


class KronblurError(Exception):
    """Base class for all domain errors."""


class ArgumentError(KronblurError):
    """A value is out of range, has the wrong shape, or is inconsistent."""


class FormatError(KronblurError):
    """A file or payload does not parse.

    ``offset`` is the byte offset of the first offending byte when the
    parser can identify one, else None.
    """

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class CapacityError(ArgumentError):
    """A dense materialization was requested above the size guard."""


class NumericError(KronblurError):
    """A computation produced non-finite values or a factorization failed."""
