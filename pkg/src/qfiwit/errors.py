"""Exception types raised by the package."""


class QfiwitError(Exception):
    """Base class for all package errors."""


class DomainError(QfiwitError, ValueError):
    """An input lies outside the domain an operation is defined on."""


class NotHermitianError(DomainError):
    pass


class RankChangeError(QfiwitError, ArithmeticError):
    """The derivative has weight inside the null space of the state.

    The SLD is then undefined: the model changes rank at this point.
    """


class UnboundedInformationError(QfiwitError, ArithmeticError):
    """An outcome with vanishing probability has a non-vanishing derivative."""


class InfiniteDivergenceError(QfiwitError, ArithmeticError):
    pass


class IntegratorError(QfiwitError, ArithmeticError):
    """The fixed-step integrator is too coarse for the requested accuracy."""
