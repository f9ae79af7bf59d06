"""Exception hierarchy shared by all modules."""


class SimulationError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(SimulationError, ValueError):
    """Invalid configuration value or inconsistent dimensions."""


class ScenarioError(SimulationError):
    """The described world is physically impossible (e.g. a target passed through the radar)."""


class NumericError(SimulationError, ArithmeticError):
    """A numerical procedure failed to converge."""


class PlanError(SimulationError):
    """An attack plan cannot be realised against the given victim."""


class PredictionError(SimulationError):
    """No ghost prediction exists for the plan (e.g. never visible)."""


class AmbiguousAngleError(SimulationError, ValueError):
    """Phase difference maps outside the arcsin domain."""


class FormatError(SimulationError, IOError):
    """A binary matrix file is truncated or corrupt."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset
