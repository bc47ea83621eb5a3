"""Exception types shared across the laboratory."""


class FragimmError(Exception):
    """Base class for all package errors."""


class ConfigError(FragimmError):
    """Malformed or inconsistent configuration; carries the offending key path."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"config key '{key}': {message}")


class AnalyticOnlyFamilyError(FragimmError):
    """Raised when an analytic-only (non-simulable) dislocation family is fed
    to an event-driven sampler."""


class GateRefusalError(FragimmError):
    """Stationary sampling requested while the existence gate is not 'yes'."""


class GuardError(FragimmError):
    """Particle-count or step-budget guard breached."""


class BudgetError(FragimmError):
    """A requested residual/error budget cannot be met within configured limits."""


class IndeterminateError(FragimmError):
    """The analytic answer is not determined by the available statements."""


class AssumptionError(FragimmError):
    """A required integrability assumption fails; names the diverging integral."""
