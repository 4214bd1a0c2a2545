"""Exception hierarchy shared by the numerical kernel and the metric layer."""


class ThzRelayError(Exception):
    """Base class for all package errors."""


class DomainError(ThzRelayError, ValueError):
    """Argument outside the domain of a special function."""


class ParameterError(ThzRelayError, ValueError):
    """Invalid model or function parameters (invariant violation, pole collision)."""


class PreconditionError(ThzRelayError, ValueError):
    """A closed form was requested outside its validity region.

    The message names the failed condition and the fallback (usually the
    quadrature path).
    """


class EvaluationError(ThzRelayError, ArithmeticError):
    """A numerical procedure failed to converge."""
