"""Exception types shared across the package."""


class SimulationError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(SimulationError, ValueError):
    """A parameter, state or configuration violates a documented invariant."""


class CapacityError(SimulationError):
    """A requested Hilbert space exceeds the configured dimension budget."""


class StiffnessError(SimulationError):
    """The adaptive integrator could not satisfy the tolerance.

    Carries the time reached and the smallest step the controller could
    still represent there.
    """

    def __init__(self, message: str, t_reached: float, min_step: float):
        super().__init__(message)
        self.t_reached = t_reached
        self.min_step = min_step


class ClosureInstabilityError(SimulationError):
    """A mean-field Bloch vector left the unit ball beyond tolerance."""

    def __init__(self, message: str, t_reached: float, max_norm: float):
        super().__init__(message)
        self.t_reached = t_reached
        self.max_norm = max_norm


class NoResonanceError(SimulationError, ValueError):
    """No spin sub-ensemble can be tuned to the requested frequency."""


class GridAlignmentError(SimulationError):
    """Sweep runs do not share a common time grid."""

    def __init__(self, message: str, offenders: tuple):
        super().__init__(message)
        self.offenders = offenders


class FitFailureError(SimulationError):
    """A nonlinear fit did not converge within the iteration budget.

    ``initializer`` holds the deterministic starting guess so callers can
    inspect or refine it.
    """

    def __init__(self, message: str, initializer):
        super().__init__(message)
        self.initializer = initializer
