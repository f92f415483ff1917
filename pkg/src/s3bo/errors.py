"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed or out-of-contract input (shapes, bounds, non-finite values)."""


class NumericalError(ArithmeticError):
    """A factorization failed even after jitter escalation."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ProtocolError(RuntimeError):
    """Scheduler lifecycle violation (unknown job, double completion)."""


class ConfigError(ValueError):
    """Invalid run configuration."""


class ObjectiveFailure(RuntimeError):
    """Too many objective evaluations failed; the run was aborted."""
