"""Exception hierarchy shared by the library and the command-line front end."""


class FracError(Exception):
    """Base class for every error raised by :mod:`fraclegendre`."""


class DomainError(FracError, ValueError):
    """An argument lies outside the domain of the requested operation."""


class ContractError(FracError, ValueError):
    """A precondition on the inputs (boundary data, grids, ...) is violated."""


class HypothesisError(ContractError):
    """A mathematical hypothesis (e.g. a sign bound on a coefficient) fails."""


class NumericalError(FracError, ArithmeticError):
    """A computed quantity is non-finite where finiteness is required."""
