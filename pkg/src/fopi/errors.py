"""Exception hierarchy shared by the toolkit modules."""


class FopiError(Exception):
    """Base class for all toolkit errors."""


class NumericalError(FopiError):
    """A computation could not produce a trustworthy result."""


class DenominatorZero(NumericalError):
    pass


class DegenerateModel(NumericalError):
    pass


class SingularSystem(NumericalError):
    pass


class EmptyCurve(NumericalError):
    pass


class CommensurateApproximationError(NumericalError):
    pass


class ConvergenceFailure(NumericalError):
    pass


class NonIntegerPlant(FopiError):
    pass


class WindowOutOfRange(FopiError):
    pass


class NoLimitCycle(NumericalError):
    pass


class HorizonTooShort(FopiError):
    pass


class NoFeasibleCandidate(FopiError):
    """Raised by callers that require at least one design candidate."""


class ConfigError(FopiError):
    """Malformed motor configuration file."""
