"""Exception types shared across the package."""


class DGVFError(Exception):
    """Base class for all package errors."""


class ConfigurationError(DGVFError, ValueError):
    """Invalid scenario, path or gain configuration."""


class ContractViolation(DGVFError, ValueError):
    """A function was called with arguments outside its contract (shapes, counts)."""


class DomainError(DGVFError, ValueError):
    """Evaluation outside the domain of a guarded function, e.g. alpha(s) for s <= r."""


class TopologyError(DGVFError, ValueError):
    """Communication topology cannot support the estimator (disconnected or unanchored)."""


class SimulationError(DGVFError, RuntimeError):
    """Numeric blow-up during integration."""

    def __init__(self, message, tick=None, robot=None):
        super().__init__(message)
        self.tick = tick
        self.robot = robot


class AnalysisError(DGVFError, ValueError):
    """A log cannot support the requested analysis (e.g. too short)."""
