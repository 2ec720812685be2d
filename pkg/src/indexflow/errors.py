"""Exception hierarchy shared by all modules."""


class IndexFlowError(Exception):
    """Base class for every error raised by the package."""


class ArgumentError(IndexFlowError, ValueError):
    """An argument is outside the domain of the operation."""


class ValidationError(IndexFlowError, ValueError):
    """An input object violates one of its structural invariants."""


class SingularCoefficientError(IndexFlowError):
    """The leading coefficient block is numerically singular."""

    def __init__(self, s, t, sigma_min):
        self.s, self.t, self.sigma_min = s, t, sigma_min
        super().__init__(
            f"leading coefficient nearly singular at (s={s:.6g}, t={t:.6g}), "
            f"smallest singular value {sigma_min:.3e}")


class ConsistencyError(IndexFlowError):
    """An internal identity that holds by construction failed."""


class IntegrationAccuracyError(IndexFlowError):
    """The ODE integrator could not reach the requested accuracy."""


class AccuracyError(IndexFlowError):
    """Adaptive quadrature did not converge."""


class RegularityError(IndexFlowError):
    """A crossing is degenerate, so local crossing formulas do not apply."""


class TrackingError(IndexFlowError):
    """Eigenphase tracking could not resolve the path."""

    def __init__(self, msg, interval=None):
        self.interval = interval
        super().__init__(msg if interval is None else
                         f"{msg} on [{interval[0]:.6g}, {interval[1]:.6g}]")


class DiscretizationError(IndexFlowError):
    """The spline discretization is degenerate."""


class PreconditionError(IndexFlowError):
    """A hypothesis of the requested identity does not hold for the given data."""


class ParseError(IndexFlowError, ValueError):
    """A configuration document does not match the schema."""
