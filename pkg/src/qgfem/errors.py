"""Exception hierarchy shared by all solver modules."""


class QGError(Exception):
    """Base class for solver errors."""


class ConfigurationError(QGError, ValueError):
    """Invalid mesh, problem, or solver parameters."""


class AssemblyError(QGError):
    """Non-finite data encountered while assembling a form."""


class DivergedStateError(QGError, FloatingPointError):
    """A state or residual contains NaN/Inf."""


class LinearSolveError(QGError):
    """The sparse direct factorization failed (singular Jacobian)."""


class StepFailure(QGError):
    """Newton's method did not converge within the iteration cap."""

    def __init__(self, message, residual_history=(), step_index=None):
        super().__init__(message)
        self.residual_history = list(residual_history)
        self.step_index = step_index


class FitDomainError(QGError, ValueError):
    """Log-linear fit requested on nonpositive data."""


class EocUndefinedError(QGError, ValueError):
    """Experimental order of convergence undefined (zero error)."""
