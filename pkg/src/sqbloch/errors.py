"""Exception types shared across the package."""


class ConvergenceError(RuntimeError):
    """An iterative routine exhausted its iteration budget."""


class StiffnessError(RuntimeError):
    """Adaptive ODE step size underflowed; the problem is too stiff for an
    explicit integrator."""


class DegenerateFitError(RuntimeError):
    """Least-squares Jacobian is rank deficient beyond what damping can
    recover."""


class UnphysicalRatesError(ValueError):
    """Decay-rate combination outside the physically allowed region."""


class MultiTransitionError(ValueError):
    """Squeezing bandwidth overlaps more than one dressed transition, so the
    two-level reduction is invalid."""


class NotSqueezedError(ValueError):
    """Moment pair has M <= N; the attenuation model cannot be inverted."""


class InconsistentInputsError(ValueError):
    """Measured timescales invert to a negative photon number."""
