"""Exception types shared across the package."""


class DopiError(Exception):
    """Base class for all package errors."""


class DataError(DopiError):
    """Invalid input data (empty dataset, bad case record, version mismatch)."""


class UnknownNodeError(DopiError):
    """A symptom, disease, or edge referenced by an operation is not in the graph."""


class SchemaError(DopiError):
    """A persisted file does not match its expected schema."""

    def __init__(self, message: str, *, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)


class StateError(DopiError):
    """An operation was invoked in a session state that does not allow it."""


class ValidationError(DopiError):
    """A request payload violates an operation's preconditions."""


class TransportError(DopiError):
    """A remote adapter call failed (timeout, connection, HTTP status)."""
