"""Exception types raised across the package."""


class QswiError(Exception):
    """Base class for every error raised by this package."""


class DimensionCapExceeded(QswiError):
    """A register layout or product would exceed the configured qubit cap."""


class UnknownGroup(QswiError, KeyError):
    pass


class LayoutMismatch(QswiError, ValueError):
    pass


class DimensionMismatch(QswiError, ValueError):
    pass


class NotHermitian(QswiError, ValueError):
    pass


class InvalidState(QswiError, ValueError):
    pass


class ZeroProbabilityBranch(QswiError):
    """Post-selection onto an outcome that (numerically) never occurs."""


class IndexOutOfRange(QswiError, IndexError):
    pass


class InvalidWitness(QswiError, ValueError):
    pass


class NoWitnessExists(QswiError, ValueError):
    pass


class OddMessageCount(QswiError, ValueError):
    pass


class WrongMessageCount(QswiError, ValueError):
    pass


class EvenRepetitions(QswiError, ValueError):
    pass


class EnumerationInfeasible(QswiError):
    pass


class MalformedDistribution(QswiError, ValueError):
    pass


class SamplingExhausted(QswiError):
    def __init__(self, message, failing_rows=()):
        super().__init__(message)
        self.failing_rows = list(failing_rows)


class AdviceRelationMismatch(QswiError, ValueError):
    pass


class UnknownFixture(QswiError, KeyError):
    pass


class Misconfigured(QswiError, ValueError):
    pass
