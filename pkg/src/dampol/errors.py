"""Exception hierarchy shared by every module."""


class DampolError(Exception):
    """Base class for all library errors."""


class DomainError(DampolError, ValueError):
    """An argument lies outside the domain where the operation is defined."""


class DistributionalKernelError(DampolError):
    """The requested kernel value is a distribution (delta function), not a number."""


class BranchPointWarning(UserWarning):
    """Evaluation sits on the bath continuum; a principal-value limit was used."""


class PoleHitError(DampolError, ZeroDivisionError):
    """Evaluation point coincides with a pole."""

    def __init__(self, location, message=None):
        self.location = complex(location)
        super().__init__(message or f"evaluation at pole s = {self.location:.12g}")


class ActiveMediumError(DampolError):
    """A dispersion pole lies in the right half-plane."""

    def __init__(self, poles):
        self.poles = list(poles)
        super().__init__(
            "active medium: pole(s) with Re(s) > 0: "
            + ", ".join(f"{p:.6g}" for p in self.poles)
        )


class ConvergenceError(DampolError):
    """An iterative or adaptive procedure failed to converge."""

    def __init__(self, message, unconverged=None):
        self.unconverged = list(unconverged or [])
        super().__init__(message)


class ContourFailure(ConvergenceError):
    """Numerical Laplace inversion could not find a contour enclosing all singularities."""


class DivergenceError(DampolError, ArithmeticError):
    """A quantity diverges (growing exponential, infinite integral)."""


class NoLongTimeLimitError(DampolError):
    """The long-time limit does not exist (undamped poles on the imaginary axis)."""


class InsufficientSpanError(DampolError, ValueError):
    """A frequency grid is too narrow or too coarse for the requested transform."""


class StepTooLargeError(DampolError, ValueError):
    """Integrator step exceeds the stability/accuracy bound."""

    def __init__(self, h, suggested):
        self.h = h
        self.suggested = suggested
        super().__init__(f"step h={h:g} too large; use h < {suggested:g}")


class QuadratureError(ConvergenceError):
    """A bath-frequency quadrature did not converge under node doubling."""


class HistoryGapError(DampolError, ValueError):
    """A sampled history does not cover the interval it is integrated over."""
