"""Exception hierarchy shared by all modules."""


class EllipticLabError(Exception):
    """Base class for every error raised by the package."""


class DomainError(EllipticLabError, ValueError):
    """Argument outside the domain where a quantity is defined."""


class ParameterError(EllipticLabError, ValueError):
    """Problem parameters violate a strict inequality required by the theory."""


class NumericError(EllipticLabError, RuntimeError):
    """A numerical method failed to reach its tolerance."""


class SearchError(NumericError):
    """A bracketing or parameter search did not find an admissible value."""


class UnsupportedFormError(EllipticLabError, TypeError):
    """An exact (closed-form) check was requested on a non-closed-form input."""


class ConstructionError(EllipticLabError):
    """A step of the supersolution construction could not be completed.

    ``actionable`` names what the caller can change (for instance a larger
    eigenball radius) when the failure is expected to be recoverable.
    """

    def __init__(self, message, actionable=None):
        super().__init__(message)
        self.actionable = actionable
