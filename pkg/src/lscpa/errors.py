"""Exception types raised across the simulator."""


class LscpaError(Exception):
    """Base class for all simulator errors."""


class ConstraintViolation(LscpaError, ValueError):
    """A configuration value violates a physical or structural invariant."""


class GeometryCalibrationError(ConstraintViolation):
    """Adjacent-BS LoS gain does not beat nearest-BS NLoS gain somewhere in the operating window."""


class DomainError(LscpaError, ValueError):
    pass


class DegenerateChannel(LscpaError, ValueError):
    pass


class PolicyMismatch(LscpaError, ValueError):
    pass


class ShapeMismatch(LscpaError, ValueError):
    pass


class AdaptiveInfeasible(LscpaError):
    """The adaptive delay needed for zero spatial mismatch is shorter than the BS minimum."""

    def __init__(self, speed: float, max_speed: float, required_delay: float, min_delay: float):
        self.speed = speed
        self.max_speed = max_speed
        self.required_delay = required_delay
        self.min_delay = min_delay
        super().__init__(
            f"adaptive delay infeasible at {speed * 3.6:.2f} km/h: needs "
            f"{required_delay * 1e3:.3f} ms < minimum {min_delay * 1e3:.3f} ms "
            f"(max feasible speed {max_speed * 3.6:.2f} km/h)"
        )


class InsufficientSamples(LscpaError, ValueError):
    pass


class UnknownPreset(LscpaError, KeyError):
    pass


class EmptyMethodSet(LscpaError, ValueError):
    pass
