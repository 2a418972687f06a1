"""Exception and warning types shared across the package."""


class ConfigError(ValueError):
    """Invalid parameters or scenario configuration."""


class RecurrenceError(ConfigError):
    """Simulation horizon reaches the Poincare recurrence time of a discrete bath."""


class IntegrationError(RuntimeError):
    """Numerical propagation failed (step-size underflow, tolerance not met)."""


class QuadratureError(IntegrationError):
    """Inverse Laplace quadrature did not converge."""


class InvariantViolation(RuntimeError):
    """A conserved quantity or positivity budget was exceeded."""


class ValidityWarning(UserWarning):
    """An approximate formula was evaluated outside its regime of validity."""
