"""Exception types shared by every module."""


class ValidationError(ValueError):
    """Input violates a documented precondition."""


class NumericalError(ArithmeticError):
    """An iterative method hit its cap before converging.

    ``best`` carries the best-so-far result, whatever shape the caller
    documents for it.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
