"""Exception hierarchy. Everything derives from :class:`RobustSplineError`."""


class RobustSplineError(Exception):
    """Base class for errors raised by this package."""


class DegenerateDesignError(RobustSplineError, ValueError):
    """Design points cannot support the requested spline space."""


class DomainError(RobustSplineError, ValueError):
    """Evaluation point lies outside the spline domain [a, b]."""

    def __init__(self, msg, index=None):
        super().__init__(msg)
        self.index = index


class OrderError(RobustSplineError, ValueError):
    """Invalid spline, derivative, or penalty order."""


class InsufficientDataError(RobustSplineError, ValueError):
    """Too few observations for the requested estimator."""


class FactorizationError(RobustSplineError, ArithmeticError):
    """Cholesky factorization hit a non-positive pivot."""

    def __init__(self, msg, pivot):
        super().__init__(msg)
        self.pivot = pivot


class SingularFitError(RobustSplineError, ArithmeticError):
    """The penalized normal equations are singular."""


class DegenerateGCVError(RobustSplineError, ArithmeticError):
    """The smoother trace reached the sample size, so GCV is undefined."""


class SelectionError(RobustSplineError, RuntimeError):
    """Every GCV evaluation of the smoothing-parameter search failed."""


class FitError(RobustSplineError, RuntimeError):
    """A fitting pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage, cause):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause
