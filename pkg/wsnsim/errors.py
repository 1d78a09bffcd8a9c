from typing import Optional


class WsnSimError(Exception):
    """Base class for every error raised by wsnsim."""


class SchedulingError(WsnSimError):
    """An event was scheduled in the past or the clock was asked to go back."""


class TopologyError(WsnSimError):
    """Invalid topology parameters or a malformed topology file."""


class ScenarioError(WsnSimError):
    """A scenario file could not be parsed or validated."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ReportError(WsnSimError):
    """Results cannot be compared (e.g. protocols ran on different seed sets)."""


class WallTimeExceeded(WsnSimError):
    """A run used up its wall-clock budget and was stopped."""

    def __init__(self, budget_s: float, sim_time_s: float):
        self.budget_s = budget_s
        self.sim_time_s = sim_time_s
        super().__init__(
            f"wall-time budget of {budget_s:g}s exceeded "
            f"at simulated t={sim_time_s:.3f}s"
        )
