"""Whole-mission planning: visiting order, per-stage hover height, energy totals.

Each stage flies level to above the next user (E1), descends to the hover
height (E2), hovers while the user harvests and uploads (E3), and climbs back
to the cruise altitude (E4); a final level leg returns to the depot.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Literal

import numpy as np
from scipy.optimize import minimize_scalar

from . import hover_comm
from .errors import InfeasibleError, InvalidParameterError, PlannerError, SolverError
from .hover_comm import ChannelParams, HoverSolution, RadioParams, UserComm
from .kinematics import (
    DiscreteTrajectory,
    KinematicLimits,
    default_slots,
    discretize,
    feasible_profile,
    validate,
)
from .propulsion import AirframeParams, PowerConstants, derive_constants, straight_energy
from .trajectory_sca import MIN_SLOTS, ScaSettings, VerticalResult, optimize_straight, optimize_vertical
from .visit_order import (
    DualSettings,
    EnergyMatrix,
    VisitOrder,
    pairwise_energy_matrix,
    solve_order_dual,
    solve_order_exhaustive,
    tour_cost,
)

Mode = Literal["HD", "FD"]
EXHAUSTIVE_CHECK_USERS = 8


@dataclass(frozen=True)
class HeightGrid:
    """Candidate hover heights: ``min_height, min_height + step, ...`` up to the
    height bound less ``margin`` (and the cruise altitude), refined by a bounded
    scalar search in the best cell.  ``heights`` replaces the lattice."""

    min_height: float = 0.1
    step: float = 0.05
    margin: float = 0.01
    refine: bool = True
    heights: tuple[float, ...] | None = None
    curve_tol: float = 1e-6

    def __post_init__(self) -> None:
        for name in ("min_height", "step", "curve_tol"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidParameterError(name, value)
        if not (math.isfinite(self.margin) and self.margin >= 0):
            raise InvalidParameterError("margin", self.margin, "must be >= 0")
        if self.heights is not None:
            hs = tuple(float(h) for h in self.heights)
            if not hs or any(not (math.isfinite(h) and h > 0) for h in hs):
                raise InvalidParameterError("heights", self.heights, "must be a non-empty list of positive heights")
            object.__setattr__(self, "heights", hs)


@dataclass(frozen=True)
class SolverSettings:
    sca: ScaSettings = field(default_factory=ScaSettings)
    dual: DualSettings = field(default_factory=DualSettings)
    height: HeightGrid = field(default_factory=HeightGrid)
    refine_matrix: bool = False
    seed: int = 0


@dataclass(frozen=True)
class UserSpec:
    position: tuple[float, float]
    comm: UserComm = field(default_factory=UserComm)

    def __post_init__(self) -> None:
        pos = tuple(float(x) for x in self.position)
        if len(pos) != 2 or not all(math.isfinite(x) for x in pos):
            raise InvalidParameterError("position", self.position, "must be two finite coordinates")
        object.__setattr__(self, "position", pos)


@dataclass(frozen=True)
class Scenario:
    users: tuple[UserSpec, ...]
    mode: Mode = "HD"
    cruise_altitude: float = 120.0
    depot: tuple[float, float] = (0.0, 0.0)
    airframe: AirframeParams = field(default_factory=AirframeParams)
    limits: KinematicLimits = field(default_factory=KinematicLimits)
    channel: ChannelParams = field(default_factory=ChannelParams)
    radio: RadioParams = field(default_factory=RadioParams)
    solver: SolverSettings = field(default_factory=SolverSettings)

    def __post_init__(self) -> None:
        users = tuple(self.users)
        if not users:
            raise InvalidParameterError("users", [], "at least one user is required")
        object.__setattr__(self, "users", users)
        mode = str(self.mode).upper()
        if mode not in ("HD", "FD"):
            raise InvalidParameterError("mode", self.mode, "must be HD or FD")
        object.__setattr__(self, "mode", mode)
        if not (math.isfinite(self.cruise_altitude) and self.cruise_altitude > 0):
            raise InvalidParameterError("cruise_altitude", self.cruise_altitude)
        depot = tuple(float(x) for x in self.depot)
        if len(depot) != 2 or not all(math.isfinite(x) for x in depot):
            raise InvalidParameterError("depot", self.depot, "must be two finite coordinates")
        object.__setattr__(self, "depot", depot)

    @property
    def consts(self) -> PowerConstants:
        return derive_constants(self.airframe)

    def positions(self) -> np.ndarray:
        return np.array([self.depot, *(u.position for u in self.users)])


@dataclass(frozen=True)
class StagePlan:
    user: int
    inbound: DiscreteTrajectory
    descent: DiscreteTrajectory
    hover: HoverSolution
    climb: DiscreteTrajectory
    hover_height: float
    flight_energy: float
    descent_energy: float
    hover_energy: float
    climb_energy: float

    @property
    def stage_energy(self) -> float:
        return self.flight_energy + self.descent_energy + self.hover_energy + self.climb_energy

    @property
    def local_energy(self) -> float:
        """Descent + hover + climb: the part that depends on the hover height."""
        return self.descent_energy + self.hover_energy + self.climb_energy

    @property
    def times(self) -> tuple[float, float, float, float]:
        return (self.inbound.duration, self.descent.duration, self.hover.hover_time, self.climb.duration)


@dataclass(frozen=True)
class MissionPlan:
    mode: Mode
    order: VisitOrder
    stages: tuple[StagePlan, ...]
    return_leg: DiscreteTrajectory
    return_energy: float
    seed: int = 0
    notes: dict = field(default_factory=dict, compare=False)

    @property
    def total_energy(self) -> float:
        return math.fsum([*(s.stage_energy for s in self.stages), self.return_energy])

    @property
    def hover_energy(self) -> float:
        return math.fsum(s.hover_energy for s in self.stages)

    @property
    def local_energy(self) -> float:
        return math.fsum(s.local_energy for s in self.stages)


# ----------------------------------------------------------------------------
# straight legs


@lru_cache(maxsize=4096)
def _straight(distance: float, limits: KinematicLimits, consts: PowerConstants, settings: ScaSettings):
    return optimize_straight(distance, limits, consts, settings)


def straight_leg(distance: float, scenario: Scenario) -> tuple[DiscreteTrajectory, float]:
    traj, energy, _ = _straight(float(distance), scenario.limits, scenario.consts, scenario.solver.sca)
    return traj, energy


def feasible_leg_energy(distance: float, limits: KinematicLimits, consts: PowerConstants) -> float:
    """Energy of the max-acceleration profile on the default slot grid plus one rest slot."""
    if distance == 0:
        return 0.0
    profile = feasible_profile(distance, limits)
    return straight_energy(discretize(profile, default_slots(profile.duration) + 1), consts)


def energy_matrix(scenario: Scenario) -> EnergyMatrix:
    if scenario.solver.refine_matrix:
        planner = lambda d: straight_leg(d, scenario)[1]  # noqa: E731
    else:
        planner = lambda d: feasible_leg_energy(d, scenario.limits, scenario.consts)  # noqa: E731
    return pairwise_energy_matrix(scenario.positions(), planner)


# ----------------------------------------------------------------------------
# vertical energy as a function of hover height


class VerticalCurve:
    """Descent + climb energy ``V1(h)`` from cruise altitude down to ``h`` and back.

    Lattice heights are evaluated in increasing order, each warm-started from
    the previous one on a shared slot count, so the curve is smooth and does
    not depend on which heights were requested first.  Off-lattice heights
    start from the lattice point just below.
    """

    def __init__(self, scenario: Scenario):
        grid = scenario.solver.height
        self.altitude = scenario.cruise_altitude
        self.min_height = grid.min_height
        self.step = grid.step
        self.limits = scenario.limits
        self.airframe = scenario.airframe
        self.consts = scenario.consts
        self.settings = replace(scenario.solver.sca, fixed_duration_rule="shortest", objective_tol=grid.curve_tol)
        top = max(self.altitude - min(self.min_height, self.altitude), 0.0)
        duration = feasible_profile(top, self.limits).duration if top > 0 else 0.0
        self.slots = self.settings.slots or max(MIN_SLOTS, default_slots(duration, self.settings.step, self.settings.max_slots))
        self._lattice: list[VerticalResult] = []
        self._extra: dict[float, VerticalResult] = {}
        self._lock = threading.Lock()

    def _solve(self, height: float, warm: VerticalResult | None, warm_drop: float | None) -> VerticalResult:
        drop = self.altitude - height
        if drop <= 0:
            return optimize_vertical(0.0, self.limits, self.consts, self.airframe, self.settings)
        window = feasible_profile(drop, self.limits).duration * self.slots / (self.slots - 1)
        start = None
        if warm is not None and warm_drop and warm.energy > 0:
            start = tuple(t.meta["full_positions"] * (drop / warm_drop) for t in (warm.descent, warm.climb))
        return optimize_vertical(
            drop, self.limits, self.consts, self.airframe, self.settings, duration=window, slots=self.slots, warm_start=start
        )

    def _lattice_height(self, k: int) -> float:
        return self.min_height + k * self.step

    def _extend(self, k: int) -> None:
        while len(self._lattice) <= k:
            j = len(self._lattice)
            prev = self._lattice[-1] if self._lattice else None
            prev_drop = self.altitude - self._lattice_height(j - 1) if prev is not None else None
            self._lattice.append(self._solve(self._lattice_height(j), prev, prev_drop))

    def result(self, height: float) -> VerticalResult:
        height = float(height)
        with self._lock:
            pos = (height - self.min_height) / self.step
            k = round(pos)
            if k >= 0 and abs(pos - k) < 1e-9:
                self._extend(k)
                return self._lattice[k]
            if height not in self._extra:
                below = math.floor(pos)
                warm = warm_drop = None
                if below >= 0:
                    self._extend(below)
                    warm, warm_drop = self._lattice[below], self.altitude - self._lattice_height(below)
                self._extra[height] = self._solve(height, warm, warm_drop)
            return self._extra[height]

    def __call__(self, height: float) -> float:
        return self.result(height).energy


_curves: dict[tuple, VerticalCurve] = {}
_curves_lock = threading.Lock()


def vertical_curve(scenario: Scenario) -> VerticalCurve:
    key = (
        scenario.cruise_altitude,
        scenario.airframe,
        scenario.limits,
        scenario.solver.sca,
        scenario.solver.height.min_height,
        scenario.solver.height.step,
        scenario.solver.height.curve_tol,
    )
    with _curves_lock:
        if key not in _curves:
            _curves[key] = VerticalCurve(scenario)
        return _curves[key]


# ----------------------------------------------------------------------------
# stage height


def height_limit(user: UserSpec, scenario: Scenario) -> float:
    bound = hover_comm.height_bound(scenario.mode, scenario.channel, scenario.radio, user.comm)
    return min(scenario.cruise_altitude, bound - scenario.solver.height.margin)


def candidate_heights(user: UserSpec, scenario: Scenario) -> np.ndarray:
    grid = scenario.solver.height
    top = height_limit(user, scenario)
    if grid.heights is not None:
        hs = np.array([h for h in grid.heights if h <= top])
    elif top < grid.min_height:
        hs = np.array([])
    else:
        count = int(math.floor((top - grid.min_height) / grid.step + 1e-9)) + 1
        hs = grid.min_height + grid.step * np.arange(count)
    return hs


def _hover(height: float, user: UserSpec, scenario: Scenario) -> HoverSolution | None:
    try:
        return hover_comm.solve(
            scenario.mode, height, scenario.channel, scenario.radio, user.comm, scenario.consts.hover_watt
        )
    except InfeasibleError:
        return None


def optimize_stage_height(
    user: int | UserSpec,
    scenario: Scenario,
    inbound: tuple[DiscreteTrajectory, float] | None = None,
) -> StagePlan:
    """Hover height minimizing descent + hover + climb energy for one user.

    ``user`` is a 1-based index into ``scenario.users`` (or a spec, reported
    as user 0).  ``inbound`` is the level leg flown before the stage.
    """
    if isinstance(user, UserSpec):
        uid, spec = 0, user
    else:
        uid, spec = int(user), scenario.users[int(user) - 1]
    curve = vertical_curve(scenario)
    heights = candidate_heights(spec, scenario)
    if heights.size == 0:
        raise InfeasibleError(
            f"user {uid}: no hover height in the grid lies below the {scenario.mode} height limit "
            f"{height_limit(spec, scenario):.4g} m",
            users=[uid],
        )

    def cost(h: float) -> float:
        hover = _hover(h, spec, scenario)
        return math.inf if hover is None else curve(h) + hover.hover_energy

    values = np.array([cost(h) for h in heights])
    if not np.isfinite(values).any():
        raise InfeasibleError(f"user {uid}: the demand cannot be met at any candidate height", users=[uid])
    i = int(np.argmin(values))
    best_h, best_v = float(heights[i]), float(values[i])
    grid = scenario.solver.height
    if grid.refine and grid.heights is None:
        lo = float(heights[max(i - 1, 0)])
        hi = float(heights[i + 1]) if i + 1 < heights.size else height_limit(spec, scenario)
        res = minimize_scalar(cost, bounds=(lo, hi), method="bounded", options={"xatol": 1e-4}) if hi > lo else None
        if res is not None and res.fun < best_v:
            best_h, best_v = float(res.x), float(res.fun)
    vertical = curve.result(best_h)
    hover = _hover(best_h, spec, scenario)
    if inbound is None:
        inbound = (DiscreteTrajectory.from_positions(np.zeros(3), 0.0), 0.0)
    return StagePlan(
        user=uid,
        inbound=inbound[0],
        descent=vertical.descent,
        hover=hover,
        climb=vertical.climb,
        hover_height=best_h,
        flight_energy=inbound[1],
        descent_energy=vertical.descent_energy,
        hover_energy=hover.hover_energy,
        climb_energy=vertical.climb_energy,
    )


# ----------------------------------------------------------------------------
# mission


def check_users(scenario: Scenario) -> None:
    """Raise one error naming every user whose height range is empty."""
    bad = [k for k, u in enumerate(scenario.users, start=1) if candidate_heights(u, scenario).size == 0]
    if bad:
        raise InfeasibleError(f"no feasible hover height for users {bad} in {scenario.mode} mode", users=bad)


def choose_order(scenario: Scenario, matrix: EnergyMatrix | None = None) -> tuple[VisitOrder, dict]:
    matrix = matrix if matrix is not None else energy_matrix(scenario)
    order, trace = solve_order_dual(matrix, scenario.solver.dual)
    notes = {"dual_iterations": trace.iterations, "dual_stop": trace.stopped_by, "dual_cost": order.total_energy}
    if matrix.users <= EXHAUSTIVE_CHECK_USERS:
        best = solve_order_exhaustive(matrix)
        notes["exhaustive_cost"] = best.total_energy
        if best.total_energy < order.total_energy - 1e-9 * max(1.0, best.total_energy):
            notes["order_gap_J"] = order.total_energy - best.total_energy
            order = best
    notes["order_method"] = order.method
    return order, notes


def _checked(traj: DiscreteTrajectory, limits: KinematicLimits, distance: float, what: str) -> None:
    report = validate(traj, limits, (0.0, distance))
    if not report:
        raise SolverError(f"{what}: trajectory failed validation ({sorted(report.kinds())})")


def plan_mission(scenario: Scenario) -> MissionPlan:
    check_users(scenario)
    pts = scenario.positions()
    matrix = energy_matrix(scenario)
    order, notes = choose_order(scenario, matrix)
    stages = []
    here = 0
    for k, uid in enumerate(order.order, start=1):
        distance = float(np.hypot(*(pts[uid] - pts[here])))
        try:
            leg = straight_leg(distance, scenario)
            _checked(leg[0], scenario.limits, distance, "inbound leg")
            stage = optimize_stage_height(uid, scenario, leg)
            drop = scenario.cruise_altitude - stage.hover_height
            _checked(stage.descent, scenario.limits, drop, "descent")
            _checked(stage.climb, scenario.limits, drop, "climb")
        except SolverError as exc:
            raise SolverError(f"stage {k} (user {uid}): {exc}", exc.trace) from exc
        stages.append(stage)
        here = uid
    distance = float(np.hypot(*(pts[0] - pts[here])))
    back, back_energy = straight_leg(distance, scenario)
    _checked(back, scenario.limits, distance, "return leg")
    notes["matrix_cost"] = tour_cost(matrix, order.order)
    return MissionPlan(
        mode=scenario.mode,
        order=order,
        stages=tuple(stages),
        return_leg=back,
        return_energy=back_energy,
        seed=scenario.solver.seed,
        notes=notes,
    )


def order_energy(plan: MissionPlan, scenario: Scenario, order) -> float:
    """Mission energy if the same stages were flown in ``order`` (1-based ids)."""
    pts = scenario.positions()
    local = {s.user: s.local_energy for s in plan.stages}
    path = [0, *order, 0]
    legs = [straight_leg(float(np.hypot(*(pts[b] - pts[a]))), scenario)[1] for a, b in zip(path[:-1], path[1:])]
    return math.fsum([*legs, *(local[u] for u in order)])


def random_order_energy(plan: MissionPlan, scenario: Scenario, rng: np.random.Generator) -> float:
    order = rng.permutation(len(scenario.users)) + 1
    return order_energy(plan, scenario, order)


def random_users(count: int, side: float, seed: int) -> tuple[UserSpec, ...]:
    rng = np.random.default_rng(seed)
    return tuple(UserSpec(tuple(p)) for p in rng.uniform(0.0, side, size=(count, 2)))


# ----------------------------------------------------------------------------
# sweeps

Axis = Literal["H", "D", "B", "P"]
SWEEP_COLUMNS = ("axis_value", "total_J", "hover_J", "flight_J", "mean_h_m", "mode", "stage_J", "error")


def with_axis(scenario: Scenario, axis: str, value: float) -> Scenario:
    """``H`` altitude (m), ``D`` demand of every user (bits), ``B`` bandwidth (Hz), ``P`` UAV power (W)."""
    if axis == "H":
        return replace(scenario, cruise_altitude=value)
    if axis == "D":
        users = tuple(replace(u, comm=replace(u.comm, demand_bits=value)) for u in scenario.users)
        return replace(scenario, users=users)
    if axis == "B":
        return replace(scenario, radio=replace(scenario.radio, bandwidth=value))
    if axis == "P":
        return replace(scenario, radio=replace(scenario.radio, uav_tx_power=value))
    raise InvalidParameterError("axis", axis, "must be one of H, D, B, P")


@dataclass(frozen=True)
class SweepRow:
    axis_value: float
    mode: str
    total_J: float = math.nan
    hover_J: float = math.nan
    flight_J: float = math.nan
    mean_h_m: float = math.nan
    stage_J: float = math.nan
    error: str = ""

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, c) for c in SWEEP_COLUMNS)


def sweep(scenario: Scenario, axis: str, values, modes=None) -> list[SweepRow]:
    """One row per (value, mode); a failing value is recorded in ``error`` and the sweep goes on.

    ``stage_J`` is descent + hover + climb summed over users; ``total_J`` is
    the whole mission including level flight.
    """
    values = list(values)
    if not values:
        raise InvalidParameterError("values", values, "must be non-empty")
    if axis not in ("H", "D", "B", "P"):
        raise InvalidParameterError("axis", axis, "must be one of H, D, B, P")
    modes = [m.upper() for m in (modes or [scenario.mode])]
    rows = []
    for value in values:
        for mode in modes:
            try:
                sc = replace(with_axis(scenario, axis, float(value)), mode=mode)
                plan = plan_mission(sc)
            except PlannerError as exc:
                rows.append(SweepRow(float(value), mode, error=f"{type(exc).__name__}: {exc}"))
                continue
            total = plan.total_energy
            rows.append(
                SweepRow(
                    axis_value=float(value),
                    mode=mode,
                    total_J=total,
                    hover_J=plan.hover_energy,
                    flight_J=total - plan.hover_energy,
                    mean_h_m=float(np.mean([s.hover_height for s in plan.stages])),
                    stage_J=plan.local_energy,
                )
            )
    return rows
