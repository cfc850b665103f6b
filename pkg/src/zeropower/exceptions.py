"""Exception hierarchy shared by all modules."""


class ZeroPowerError(Exception):
    """Base class for every error raised by the package."""


class RankError(ZeroPowerError):
    """A matrix that must have full column rank does not."""


class DomainError(ZeroPowerError, ValueError):
    """An argument lies outside the admissible domain."""


class ConditioningError(ZeroPowerError):
    """A linear system is too ill-conditioned to be solved reliably."""


class NotPSDError(ZeroPowerError, ValueError):
    """A covariance matrix has a materially negative eigenvalue."""


class DegenerateStatisticError(ZeroPowerError):
    """The test statistic is constant (lambda_1(B) == lambda_max(B))."""


class IntegrityError(ZeroPowerError):
    """A result contradicts a property that must hold mathematically."""


class ResolutionError(ZeroPowerError):
    """Monte Carlo sample too small to resolve the requested quantity."""


class LimitVerificationError(ZeroPowerError):
    """The covariance family fails the numerical concentration check."""


class NumericalFailure(ZeroPowerError):
    """Quadrature did not converge.

    Parameters
    ----------
    message : str
    diagnostics : dict
        Step size, truncation interval, evaluation count and the last two
        estimates, for post-mortem inspection.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class NothingToAugmentError(ZeroPowerError, ValueError):
    """The artificial regressor already lies in the column space of X."""
