"""Exception hierarchy.

Every input-validation failure derives from :class:`ValidationError` (itself a
``ValueError``) so callers and the CLI can treat them uniformly.
"""


class QLogspaceError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(QLogspaceError, ValueError):
    """Input violates a documented precondition."""


class NotHermitian(ValidationError):
    pass


class NotContraction(ValidationError):
    pass


class NotUnitary(ValidationError):
    pass


class NotUnit(ValidationError):
    """Vector is not normalized."""


class NotPowerOfTwo(ValidationError):
    pass


class NotUnital(ValidationError):
    pass


class InvalidKraus(ValidationError):
    pass


class InvalidState(ValidationError):
    pass


class InvalidProgram(ValidationError):
    pass


class LayoutMismatch(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class DimensionTooLarge(ValidationError):
    pass


class ZeroMatrix(ValidationError):
    pass


class PaddingRequired(ValidationError):
    pass


class GapViolation(QLogspaceError):
    """The promise gap of a decision problem does not hold for this input."""
