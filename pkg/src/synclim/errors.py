"""Exception types shared across the package."""


class ParameterError(ValueError):
    """Invalid parameter or argument value."""


class DivergenceError(RuntimeError):
    """The integrator produced a non-finite state.

    Carries the simulation time at which the blow-up was detected.
    """

    def __init__(self, time, message=None):
        self.time = float(time)
        super().__init__(message or f"state diverged at t = {self.time:.6g}")


class ContractionError(RuntimeError):
    """Fixed-point iteration refused or failed to contract.

    ``suggested_horizon`` is a time horizon on which the contraction
    constant would drop to 0.5, when that is what went wrong.
    """

    def __init__(self, message, constant=None, suggested_horizon=None):
        self.constant = constant
        self.suggested_horizon = suggested_horizon
        super().__init__(message)


class ConvergenceFailure(RuntimeError):
    """An iteration hit its step budget without meeting tolerance."""


class DecayFitError(RuntimeError):
    """Mode-amplitude fit could not be performed."""


class ConfigError(Exception):
    """Invalid run configuration (CLI exit code 2)."""
