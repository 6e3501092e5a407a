"""Exception types shared across the package."""


class ExchmineError(Exception):
    pass


class ParseError(ExchmineError, ValueError):
    """Malformed input; carries the 1-based line number when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ShapeError(ExchmineError, ValueError):
    pass


class SwapError(ExchmineError, ValueError):
    """A swap was applied to a dataset where it is not applicable."""


class UsageError(ExchmineError, ValueError):
    pass


class SessionComplete(ExchmineError):
    """No unconstrained candidate itemsets remain."""


class SessionFormatError(ExchmineError, ValueError):
    pass


class MigrationError(SessionFormatError):
    def __init__(self, found, expected):
        self.found = found
        self.expected = expected
        super().__init__(f"session schema version {found!r} cannot be read (expected {expected!r})")
