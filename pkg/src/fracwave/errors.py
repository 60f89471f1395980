"""Exception hierarchy shared by all fracwave modules."""


class FracwaveError(Exception):
    """Base class for library errors."""


class DomainError(FracwaveError, ValueError):
    """Argument outside the domain where the quantity is defined."""


class NonConvergence(FracwaveError, ArithmeticError):
    """A series or quadrature could not meet its tolerance within budget."""


class GridError(FracwaveError, ValueError):
    """Evaluation point incompatible with the sampling grid."""


class SingularMatrix(FracwaveError, ArithmeticError):
    pass


class QuadratureFailure(FracwaveError, ArithmeticError):
    pass


class IterationBudgetExceeded(FracwaveError, ArithmeticError):
    pass


class CoverageError(FracwaveError, ValueError):
    """Tabulated data does not cover the requested evaluation region."""


class LinearSolveFailure(FracwaveError, ArithmeticError):
    pass


class EmptyOverlap(FracwaveError, ValueError):
    pass


class StabilityWarning(UserWarning):
    pass
