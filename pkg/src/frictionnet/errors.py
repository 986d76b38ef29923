"""Exception hierarchy shared by every frictionnet module."""


class FrictionNetError(Exception):
    """Base class for all errors raised by this package."""


class NetworkError(FrictionNetError):
    """Structural problem with a network definition."""


class CycleDetected(NetworkError):
    pass


class MissingCpt(NetworkError):
    pass


class RowLengthMismatch(NetworkError):
    pass


class UnnormalizedRow(NetworkError):
    pass


class UnknownParent(NetworkError):
    pass


class DuplicateName(NetworkError):
    pass


class AllZeroRow(NetworkError):
    pass


class InferenceError(FrictionNetError):
    pass


class IncompleteAssignment(InferenceError):
    pass


class InvalidEvidence(InferenceError):
    """Evidence names an unknown variable or an out-of-range state."""


class QueryIsEvidence(InferenceError):
    pass


class ZeroProbabilityEvidence(InferenceError):
    pass


class InvalidClamp(InferenceError):
    pass


class MetricError(FrictionNetError, ValueError):
    pass


class DimensionMismatch(MetricError):
    pass


class NonOrdinalVariable(MetricError):
    pass


class EmptySampleSet(MetricError):
    pass


class LengthMismatch(MetricError):
    pass


class EmptyAfterExclusion(MetricError):
    pass


class UnnormalizedScores(MetricError):
    pass


class DiscretizationError(FrictionNetError, ValueError):
    pass


class NonFiniteInput(DiscretizationError):
    pass


class NegativeFriction(DiscretizationError):
    pass


class OutOfRange(DiscretizationError):
    pass


class ZeroOrNegativeSpeed(FrictionNetError, ValueError):
    pass


class NonPositiveLoad(FrictionNetError, ValueError):
    pass


class LogFormatError(FrictionNetError):
    """A sensor log, ground-truth or scenario file is malformed."""


class ScenarioError(FrictionNetError):
    pass
