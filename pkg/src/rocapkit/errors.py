"""Exception hierarchy.

Every error raised by the toolkit derives from :class:`RocapError`. The two
intermediate classes decide the CLI exit code: :class:`DataError` maps to 2,
:class:`NumericalError` maps to 3.
"""


class RocapError(Exception):
    pass


class DataError(RocapError):
    """Bad, missing or inconsistent input data."""


class NumericalError(RocapError):
    """A solver could not produce a trustworthy answer."""


# transforms / kinematics
class LengthMismatch(DataError):
    pass


class Unreachable(NumericalError):
    pass


# handeye
class TooFewStations(DataError):
    pass


class TooFewPairs(DataError):
    pass


class DegenerateMotion(NumericalError):
    pass


class SingularNormalEquations(NumericalError):
    pass


# camera
class BehindCamera(DataError):
    pass


class DegenerateCorners(NumericalError):
    pass


class CountMismatch(DataError):
    pass


# sampler
class InvalidStep(DataError):
    pass


class EmptyPlan(DataError):
    pass


# capture
class CalibrationMissing(DataError):
    pass


class PlanChainMismatch(DataError):
    pass


# annotate
class FullyBehind(DataError):
    pass


class OutsideImage(DataError):
    pass


class NotFound(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class InvalidRange(DataError):
    pass


# evalkit
class UnknownRecordId(DataError):
    pass


class EmptyPredictionSet(DataError):
    pass


class EmptyState(DataError):
    pass


# config
class ConfigError(DataError):
    pass
