"""Exception types raised across the package.

Input-validation failures derive from ``ValueError`` so callers that only
care about "bad input" can catch that; numerical failures derive from
``ArithmeticError`` or ``RuntimeError``.
"""


class QSpecError(Exception):
    """Base class for every error raised by qspec."""


# signal
class NonFinite(QSpecError, ValueError):
    pass


class TooShort(QSpecError, ValueError):
    pass


# qregression
class InvalidTau(QSpecError, ValueError):
    pass


class InvalidFrequency(QSpecError, ValueError):
    pass


class NoConvergence(QSpecError, RuntimeError):
    pass


# qperiodogram
class AsymmetricInput(QSpecError, ValueError):
    pass


# arfit
class SingularToeplitz(QSpecError, ArithmeticError):
    pass


class EmptyLadder(QSpecError, ValueError):
    pass


class MismatchedLadders(QSpecError, ValueError):
    pass


class NonCausalPacf(QSpecError, ValueError):
    pass


class NonCausalCoeffs(QSpecError, ValueError):
    pass


class ZeroSpectrum(QSpecError, ValueError):
    pass


# smooth
class TooFewPoints(QSpecError, ValueError):
    pass


class UnorderedX(QSpecError, ValueError):
    pass


class NegativeOrdinate(QSpecError, ValueError):
    pass


class NonPositiveBandwidth(QSpecError, ValueError):
    pass


# metrics
class NotNormalized(QSpecError, ValueError):
    pass


class NonPositiveEntry(QSpecError, ValueError):
    pass


class LengthMismatch(QSpecError, ValueError):
    pass


# cli
class WindowTooLong(QSpecError, ValueError):
    pass


class StageError(QSpecError, RuntimeError):
    """Wraps a failure inside the estimation pipeline with its location."""

    def __init__(self, stage, tau, cause):
        self.stage = stage
        self.tau = tau
        self.cause = cause
        where = f"stage {stage!r}" if tau is None else f"stage {stage!r} at tau={tau:g}"
        super().__init__(f"{where}: {cause}")
