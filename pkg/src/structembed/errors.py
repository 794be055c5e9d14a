"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """Raised when an input violates an operation's preconditions."""


class ResourceLimit(RuntimeError):
    """Raised when a request exceeds a configured size cap."""


class DataError(ValueError):
    """Raised for unreadable or malformed dataset files."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line
