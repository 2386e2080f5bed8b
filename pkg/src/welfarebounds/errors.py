"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError-family -> 2, DataError-family
-> 3, NumericalError-family -> 4.  EmptyConfidenceSet is not a failure mode;
callers that tolerate empty sets catch it and keep going.
"""


class WelfareBoundsError(Exception):
    """Base class for all library errors."""


class ConfigError(WelfareBoundsError):
    """A run parameter is missing, malformed, or out of range."""


class DataError(WelfareBoundsError):
    """Input data is malformed or insufficient."""


class NumericalError(WelfareBoundsError):
    """A computation cannot proceed on otherwise well-formed input."""


class InvalidLevel(ConfigError):
    """Confidence level or alpha outside (0, 1)."""


class InvalidGrid(ConfigError):
    """Grid bounds or node count do not describe a usable grid."""


class InvalidSample(DataError):
    """Arrays of mismatched length, too few rows, or non-finite entries."""


class DegenerateResponse(DataError):
    """All response values are equal, so rank-based dependence is undefined."""


class SchemaError(DataError):
    """A required CSV column is missing."""


class ParseError(DataError):
    """A CSV cell could not be parsed; carries row and column."""

    def __init__(self, message, row=None, col=None):
        super().__init__(message)
        self.row = row
        self.col = col


class TooFewObservations(DataError):
    """A good has fewer usable rows than the estimators need."""


class SingularDesign(NumericalError):
    """The regressor is constant; no slope can be identified."""


class WeakFirstStage(NumericalError):
    """The instrument has exactly zero first-stage covariance with price."""


class NonpositiveSlope(NumericalError):
    """The fitted slope is not positive, so theta = 1/slope has no positive value."""


class InvalidTheta(NumericalError):
    """A theta vector violates positivity or shape requirements."""


class NegativePriceChange(NumericalError):
    """Price decreases are outside the model's domain."""


class InfeasibleConstraint(NumericalError):
    """The sum constraint cannot be met inside the box."""


class EmptyConfidenceSet(WelfareBoundsError):
    """No parameter value was accepted; analysis may continue without this good.

    Carries the confidence level and, when available, the rejected interval
    and the full grid profile for diagnostics.
    """

    def __init__(self, message, level=None, interval=None, profile=None):
        super().__init__(message)
        self.level = level
        self.interval = interval
        self.profile = profile
