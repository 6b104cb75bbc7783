"""Exception types shared across the toolkit.

The CLI maps these onto process exit codes: input problems exit 2,
capability limits exit 3, numeric failures exit 4.
"""


class InputError(ValueError):
    """Invalid arguments or malformed input data."""


class ParseError(InputError):
    """Malformed file content; carries a 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class CapabilityError(RuntimeError):
    """The request exceeds what this desk-scale implementation supports."""


class NumericError(RuntimeError):
    """A numeric computation failed (NaN or infinite loss/gradients)."""
