"""Exception types raised across the package."""


class PacFourierError(Exception):
    """Base class for all package errors."""


class DimensionTooLargeError(PacFourierError, ValueError):
    pass


class DegenerateFeatureError(PacFourierError, ValueError):
    """A feature is constant on the sample, so its standard deviation is zero."""

    def __init__(self, index: int, mean: float):
        self.index = index
        self.mean = mean
        super().__init__(f"feature {index} is degenerate (mean {mean:+.6g}, std 0)")


class BudgetExceededError(PacFourierError, ValueError):
    pass


class BasisTooLargeError(PacFourierError, ValueError):
    pass


class DataError(PacFourierError, ValueError):
    """Malformed input data; carries the offending location when known."""

    def __init__(self, message: str, row: int | None = None, column: int | None = None):
        self.row = row
        self.column = column
        where = ""
        if row is not None:
            where = f" (row {row}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + where)
