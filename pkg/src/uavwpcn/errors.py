"""Exception hierarchy shared by the planner modules."""

from __future__ import annotations


class PlannerError(Exception):
    """Base class for all planner errors."""


class InvalidParameterError(PlannerError, ValueError):
    """A numeric input is outside its allowed range."""

    def __init__(self, field: str, value: object, reason: str = "must be positive"):
        self.field = field
        self.value = value
        super().__init__(f"{field}={value!r}: {reason}")


class ModelDomainError(PlannerError, ValueError):
    """Inputs are valid numbers but the physical model is undefined there."""


class InfeasibleError(PlannerError):
    """The communication or height problem has no feasible point."""

    def __init__(self, message: str, users: list[int] | None = None):
        self.users = list(users or [])
        super().__init__(message)


class InfeasibleHeightError(InfeasibleError):
    """Hover height at or above the harvesting height bound."""

    def __init__(self, height: float, bound: float, mode: str):
        self.height = height
        self.bound = bound
        self.mode = mode
        super().__init__(
            f"{mode}: hover height {height:.4g} m is not below the height bound {bound:.4g} m "
            "(harvested power does not cover the user's circuit power)"
        )


class SolverError(PlannerError):
    """An iterative solver failed; carries whatever trace it produced."""

    def __init__(self, message: str, trace: object = None):
        self.trace = trace
        super().__init__(message)


class ScenarioParseError(PlannerError):
    """Scenario document could not be parsed or validated."""

    def __init__(self, message: str, path: str = "", line: int | None = None):
        self.path = path
        self.line = line
        where = path or "<document>"
        if line is not None:
            where += f" (line {line})"
        super().__init__(f"{where}: {message}")
