"""Exception and warning types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class FitError(ValueError):
    """The sample set cannot support a fit (too few points, degenerate design)."""


class UndefinedEstimateError(DomainError):
    """The statistic is undefined for the input, e.g. a zero-variance series."""


class NoCrossingError(DomainError):
    """The autocorrelation never fell below 1/e within the computed lags."""

    def __init__(self, message, max_lag):
        super().__init__(message)
        self.max_lag = max_lag


class DataFormatError(ValueError):
    """A malformed input file. ``line`` is 1-based, or None if not line-bound."""

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}:"
            if line is not None:
                where += f"{line}:"
            where += " "
        super().__init__(where + message)
        self.path = path
        self.line = line


class OutOfValidityWarning(UserWarning):
    """A model was evaluated outside its published distance range."""


class SpanLengthWarning(UserWarning):
    """A raw span does not carry the nominal number of power samples."""
