"""Exceptions raised by the elliptical goodness-of-fit package.

All validation failures derive from :class:`ValueError` so that callers
written against plain ``ValueError`` keep working.
"""


class ValidationError(ValueError):
    """Raised when an input violates a precondition."""


class DegenerateCovariateError(ValidationError):
    """Raised when a covariate has zero (or negative) variance."""


class NotPositiveSemidefiniteError(ValidationError):
    """Raised when a matrix expected to be PSD has a negative eigenvalue."""


class CapacityError(ValidationError):
    """Raised when an enumeration would exceed its configured cap.

    Only raised by the brute-force reference computations of the test
    suite, it is not exported from the package.

    """


class CsvParseError(ValidationError):
    """Raised when a CSV file cannot be read as a numeric matrix."""

    def __init__(self, msg: str, row: int, column: int | None = None):
        """Construct the parse error.

        Args:
            msg: Human readable description.
            row: One-based line number in the file.
            column: One-based column number, if known.

        """
        super().__init__(msg)
        self.row: int = row
        self.column: int | None = column


class UnsupportedMomentError(NotImplementedError):
    """Raised when no route exists to compute a requested moment ratio."""


class ZeroDirectionError(ArithmeticError):
    """Raised when a Gaussian direction draw has zero norm."""
