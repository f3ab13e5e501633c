"""Exception hierarchy."""


class ProdGeomError(Exception):
    pass


class UsageError(ProdGeomError, ValueError):
    """Arguments are inconsistent (mismatched base points, non-orthonormal planes...)."""


class DomainError(ProdGeomError, ValueError):
    """A parameter lies outside the domain where an operation is defined."""


class SingularChartError(ProdGeomError):
    """The parametrization has a rank-deficient Jacobian at the requested point."""


class DegenerateFrameError(ProdGeomError):
    """C^2 is too close to 1 for the adapted frame to exist."""


class ExcludedSetError(DomainError):
    """Point too close to the set where h = 0 and sqrt(2) t is an odd multiple of pi."""


class FocalPointError(ProdGeomError):
    """det(B) vanishes: the parallel map is not an immersion here."""


class ContractError(ProdGeomError):
    """A documented precondition of an operation does not hold."""


class NonConvergenceError(ProdGeomError):
    """Newton iteration failed; carries the last iterate and the residual history."""

    def __init__(self, message, last_iterate=None, residuals=()):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residuals = list(residuals)
