"""Error hierarchy shared by the whole package.

Every error that a caller is expected to handle carries a ``details``
dict which serializes to JSON unchanged; the CLI prints it on stderr.
"""


class DivfanError(Exception):
    """Base class; ``details`` is a JSON-ready payload."""

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details

    def payload(self):
        return {"error": type(self).__name__, "message": str(self), **self.details}


class SchemaError(DivfanError):
    """Malformed input data (CLI exit code 1)."""


class MathError(DivfanError):
    """Input is well-formed but mathematically invalid (CLI exit code 2)."""


class InternalError(DivfanError):
    """A cross-verification inside the library failed (CLI exit code 3)."""
