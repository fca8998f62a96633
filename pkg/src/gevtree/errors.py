"""Exception hierarchy.

Every error raised on purpose by the library derives from :class:`GevTreeError`,
which the CLI maps to exit code 2. Most also derive from ``ValueError`` so that
callers who only care about "bad input" can catch the builtin.
"""


class GevTreeError(Exception):
    """Base class for all library errors."""


# -- distribution kernel ---------------------------------------------------

class SupportViolation(GevTreeError, ValueError):
    """An observation lies outside the support of the distribution."""


class DomainError(GevTreeError, ValueError):
    """An argument is outside the mathematical domain of the operation."""


class RegularityError(GevTreeError, ValueError):
    """Shape is too negative for the Fisher information to exist (xi <= -0.5)."""


class NumericalError(GevTreeError, ArithmeticError):
    """A special-function evaluation produced a non-finite value."""


class IllConditioned(GevTreeError, ArithmeticError):
    """Fisher information matrix is too ill-conditioned to invert."""


class HeavyTail(GevTreeError, ValueError):
    """Tail is too heavy for the requested moment (xi >= 1)."""


# -- probability weighted moments ------------------------------------------

class PwmError(GevTreeError, ValueError):
    """A sample cannot be fitted by probability weighted moments."""


class TooFewSamples(PwmError):
    pass


class DegenerateSample(PwmError):
    pass


class InvalidScale(PwmError):
    pass


class ShapeOutOfRange(PwmError):
    pass


# -- trees and ensembles ---------------------------------------------------

class ZeroParentScore(GevTreeError, ZeroDivisionError):
    pass


class EmptyDataset(GevTreeError, ValueError):
    pass


class RootUnfittable(GevTreeError, ValueError):
    pass


class DimensionMismatch(GevTreeError, ValueError):
    pass


class MemberFitFailure(GevTreeError, RuntimeError):
    pass


# -- io and risk -----------------------------------------------------------

class EmptySeries(GevTreeError, ValueError):
    pass


class SchemaMismatch(GevTreeError, ValueError):
    pass


class ParseError(GevTreeError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class VersionMismatch(GevTreeError, ValueError):
    pass


class CorruptModel(GevTreeError, ValueError):
    pass


class IncompleteDay(GevTreeError, ValueError):
    pass
