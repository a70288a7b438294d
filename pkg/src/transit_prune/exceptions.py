"""Exception types raised across the package."""


class TransitError(Exception):
    """Base class for all errors raised by transit_prune."""


class InvalidGraphError(TransitError):
    """A transfer graph violates a structural requirement."""


class NotAPathError(TransitError):
    """A vertex sequence is not a path in the given graph."""

    def __init__(self, u: int, v: int):
        super().__init__(f"no edge from vertex {u} to vertex {v}")
        self.pair = (u, v)


class IngestError(TransitError):
    """Raised when timetable input data cannot be read or is malformed."""

    def __init__(self, message: str, file: str | None = None, line: int | None = None):
        loc = ""
        if file is not None:
            loc = f" [{file}" + (f":{line}" if line is not None else "") + "]"
        super().__init__(message + loc)
        self.file = file
        self.line = line


class GenerationError(TransitError):
    """A synthetic network specification cannot be satisfied."""


class QueryError(TransitError):
    """A routing query refers to unknown stops or is otherwise unusable."""


class PreconditionError(TransitError):
    """An operation was invoked without a required precondition holding."""


class NoJourneyError(TransitError):
    """Journey reconstruction was requested for an unreachable label."""


class OracleScaleError(TransitError):
    """A brute-force oracle was asked to run beyond its enforced size caps."""


class CorrelationError(TransitError):
    """Correlation is undefined for the given data (e.g. zero variance)."""
