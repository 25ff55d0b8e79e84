"""Exception hierarchy.

Everything raised on bad data or numerical trouble derives from
:class:`QMCMetricsError`. The CLI maps :class:`ConfigurationError` (bad
parameters) to exit status 1 and everything else to exit status 2.
"""


class QMCMetricsError(Exception):
    """Base class for all library errors."""


class ConfigurationError(QMCMetricsError, ValueError):
    pass


class UnsupportedDimensionError(ConfigurationError):
    pass


class DomainError(QMCMetricsError, ValueError):
    """An input lies outside the domain of a transform."""


class ShapeError(QMCMetricsError, ValueError):
    pass


class InsufficientSamplesError(QMCMetricsError, ValueError):
    pass


class NotPSDError(QMCMetricsError, ValueError):
    pass


class NumericalError(QMCMetricsError, ArithmeticError):
    pass


class InvalidPosteriorError(QMCMetricsError, ValueError):
    pass


class SingularFitError(QMCMetricsError, ValueError):
    pass


class ConstructionError(QMCMetricsError, RuntimeError):
    pass


class FormatError(QMCMetricsError, ValueError):
    """A file does not follow the expected binary or text layout."""


class DataError(QMCMetricsError, ValueError):
    """A file parsed correctly but holds unusable values."""
