"""Energy-minimizing mission planner for a rotary-wing UAV serving wirelessly powered ground users."""

from .errors import (
    InfeasibleError,
    InfeasibleHeightError,
    InvalidParameterError,
    ModelDomainError,
    PlannerError,
    ScenarioParseError,
    SolverError,
)
from .kinematics import DiscreteTrajectory, KinematicLimits, discretize, feasible_profile, validate
from .propulsion import AirframeParams, PowerConstants, derive_constants, straight_power, vertical_power

__version__ = "0.1.0"

__all__ = [
    "AirframeParams",
    "DiscreteTrajectory",
    "InfeasibleError",
    "InfeasibleHeightError",
    "InvalidParameterError",
    "KinematicLimits",
    "ModelDomainError",
    "PlannerError",
    "PowerConstants",
    "ScenarioParseError",
    "SolverError",
    "derive_constants",
    "discretize",
    "feasible_profile",
    "straight_power",
    "validate",
    "vertical_power",
]
