"""Shared exception types."""


class InputError(ValueError):
    """Malformed or non-finite input to a numeric operation."""


class ModelParseError(ValueError):
    """Robot description file rejected; carries the offending element path."""

    def __init__(self, message, element_path=""):
        self.element_path = element_path
        if element_path:
            message = f"{message} (at {element_path})"
        super().__init__(message)


class ConfigError(ValueError):
    """Bad configuration: unknown key, wrong type, or out-of-range value."""


class NumericalError(RuntimeError):
    """A numeric routine lost required structure (singular KKT, non-SPD covariance)."""


class SimulationDiverged(RuntimeError):
    """Simulated state blew up; carries the last valid state for post-mortem."""

    def __init__(self, message, last_state=None):
        self.last_state = last_state
        super().__init__(message)


class PlanInfeasibleError(RuntimeError):
    """A planner QP reported infeasibility; carries a first-violation diagnosis."""

    def __init__(self, message, diagnosis=""):
        self.diagnosis = diagnosis
        if diagnosis:
            message = f"{message}: {diagnosis}"
        super().__init__(message)
