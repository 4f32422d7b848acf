"""Exception hierarchy.

``InputError`` subclasses signal bad data or configuration (CLI exit 2);
``EstimationError`` subclasses signal a numerically unusable estimate at the
requested point (CLI exit 3).
"""


class DeconvIVError(Exception):
    pass


class InputError(DeconvIVError):
    pass


class EstimationError(DeconvIVError):
    pass


class EmptySample(InputError):
    pass


class InvalidSample(InputError):
    pass


class MalformedCsv(InputError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MissingColumn(InputError):
    pass


class EmptyCandidateGrid(InputError):
    pass


class IllPosedDenominator(EstimationError):
    pass


class GridTooCoarse(EstimationError):
    pass


class DegenerateDenominator(EstimationError):
    pass


class QuantileBracketFailure(EstimationError):
    pass


class AllPointsTrimmed(EstimationError):
    pass


class ZeroCovariance(EstimationError):
    pass


class Design2DomainError(EstimationError):
    pass


class TooManyFailures(EstimationError):
    def __init__(self, message, failures=None):
        self.failures = failures
        super().__init__(message)
