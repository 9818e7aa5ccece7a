"""Exception types shared across the package."""


class QCurveError(Exception):
    """Base class for all qcurve errors."""


class DomainError(QCurveError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigurationError(QCurveError, ValueError):
    """Unsupported or inconsistent configuration (rule kind, truncation, ...)."""


class SingularityError(DomainError):
    """Kernel evaluated at coincident points."""


class AccuracyError(QCurveError):
    """A numerical procedure could not reach its stated accuracy."""


class SearchFailure(QCurveError):
    """Critical-point search did not produce an isolated census."""


class NotInClassError(QCurveError):
    """Curvature function violates a nondegeneracy precondition."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class SizeError(QCurveError):
    """Exhaustive enumeration would exceed the supported size."""


class ConvexityError(QCurveError):
    """Balancing functional is not strictly convex (smallest eigenvalue <= 0)."""


class DivergenceError(QCurveError):
    """Newton iteration lost positivity and could not recover."""


class NonConvergenceError(QCurveError):
    """Newton iteration exhausted its iteration budget."""


class SeedError(QCurveError):
    """The first solve of a continuation failed."""


class ProfileMismatchError(QCurveError):
    """Rescaled peak does not fit the standard profile."""


class LedgerFailure(QCurveError):
    """One or more closed-form identities failed verification."""

    def __init__(self, message, failures=()):
        super().__init__(message)
        self.failures = list(failures)
