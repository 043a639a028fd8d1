"""Exception hierarchy shared by the contour, dynamics and stepper modules."""


class SqgError(RuntimeError):
    """Base class for numerical failures raised by this package."""

    reason = "numerical"


class SelfIntersectionError(SqgError):
    reason = "arc_chord"


class SingularityError(SqgError):
    """Raised when the arc-chord quantity overflows inside a kernel."""

    reason = "arc_chord"


class GaugeError(SqgError):
    reason = "gauge"


class ReparameterizationError(SqgError):
    """The reparameterization lost monotonicity (d phi / d gamma <= floor)."""

    reason = "phi"


class NumericalFailure(SqgError):
    reason = "numerical"


class QuadratureConsistencyError(SqgError):
    reason = "numerical"


class NearBoundaryError(SqgError, ValueError):
    reason = "numerical"


class NonFiniteError(SqgError):
    reason = "nan"
