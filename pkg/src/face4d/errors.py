"""Exception hierarchy shared across the package."""


class Face4DError(Exception):
    """Base class for all errors raised by face4d."""


class DimensionMismatch(Face4DError):
    """Coefficient / landmark / basis dimensions do not agree."""


class InvalidConfig(Face4DError):
    """A configuration value violates its documented constraints."""


class FormatError(Face4DError):
    """A binary model stream is malformed (bad magic, version, or lengths)."""


class InvariantViolation(Face4DError):
    """A deserialized or constructed model fails its structural invariants."""


class TooFewLandmarks(Face4DError):
    """Fewer valid landmarks than the configured minimum."""


class RankDeficient(Face4DError):
    """The pose design matrix is numerically rank-deficient (e.g. collinear points)."""


class SingularSystem(Face4DError):
    """The unregularized coefficient system is singular."""


class EmptyInput(Face4DError):
    """An aggregate operation received an empty collection."""


class TooShort(Face4DError):
    """A sequence metric needs at least two entries."""


class LineError(Face4DError):
    """Base for stream errors that carry a 1-based line number."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class ParseError(LineError):
    """A landmark/report stream could not be parsed."""


class SchemaError(LineError):
    """A parsed stream violates its schema (wrong landmark count, bad timestamps)."""
