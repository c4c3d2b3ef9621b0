"""Successive convex approximation of minimum-energy straight and vertical flights.

Each segment is flown over a time window split into ``N`` slots.  The
nonconvex slot powers are replaced by convex majorants built from global
first-order bounds, so every convexified subproblem upper-bounds the true
energy and touches it at the current iterate; the true energy of successive
iterates therefore never increases.

Straight flight
    slacks ``A_n >= |c2 v^2 + c3 a|`` and ``0 < B_n <= sqrt(r2(A_n, v_n))``
    with the induced term written as ``P1 (1 + A^2) / B``.
Vertical flight
    slack ``X_n >= sqrt(v^2 + 2T/(rho A))`` with the thrust-times-slack
    product bounded above by :func:`product_upper_bound`.

The convex models are written in per-slot units (metres per slot) so that
the slot length only enters through parameters; one compiled model serves
every window length and every linearization point with the same ``N``.
"""

from __future__ import annotations

import csv
import io
import math
import threading
from dataclasses import dataclass, field, replace
from typing import Literal

import cvxpy as cp
import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize_scalar

from .convex import ConvexSubproblem, SubproblemResult, solve_convex_subproblem
from .errors import InvalidParameterError, ModelDomainError, SolverError
from .kinematics import (
    DEFAULT_STEP,
    MAX_SLOTS,
    DiscreteTrajectory,
    KinematicLimits,
    VelocityProfile,
    default_slots,
    discretize,
    feasible_profile,
    fly_time_bound,
    sample_profile,
    validate,
)
from .propulsion import (
    AirframeParams,
    Direction,
    PowerConstants,
    straight_energy,
    vertical_energy,
)

PAD_SPEED = 1e-3
PAD_DISTANCE = 1e-2
MIN_SLOTS = 8

DurationRule = Literal["search", "shortest", "energy_bound", "multiple_of_feasible"]


@dataclass(frozen=True)
class ScaSettings:
    """Loop control for the SCA refinement.

    ``fixed_duration_rule`` picks the straight-flight window: ``search`` scans
    window lengths between the feasible-profile duration and the fly-time
    bound, ``shortest`` uses the feasible-profile duration on the slot grid,
    ``energy_bound`` uses the bound directly, ``multiple_of_feasible``
    uses ``duration_multiple`` times the feasible duration.  The same rule
    applies to each vertical leg.
    """

    max_outer_iters: int = 50
    objective_tol: float = 1e-4
    subproblem_kkt_tol: float = 1e-8
    slots: int | None = None
    fixed_duration_rule: DurationRule = "search"
    duration_multiple: float = 1.5
    min_window_multiple: float = 1.25
    search_tol: float = 0.02
    step: float = DEFAULT_STEP
    max_slots: int = MAX_SLOTS

    def __post_init__(self) -> None:
        if int(self.max_outer_iters) != self.max_outer_iters or self.max_outer_iters < 1:
            raise InvalidParameterError("max_outer_iters", self.max_outer_iters, "must be an integer >= 1")
        for name in ("objective_tol", "subproblem_kkt_tol", "step", "search_tol"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidParameterError(name, value)
        if self.fixed_duration_rule not in ("search", "shortest", "energy_bound", "multiple_of_feasible"):
            raise InvalidParameterError(
                "fixed_duration_rule",
                self.fixed_duration_rule,
                "must be search, shortest, energy_bound or multiple_of_feasible",
            )
        for name in ("duration_multiple", "min_window_multiple"):
            if not getattr(self, name) > 1.0:
                raise InvalidParameterError(name, getattr(self, name), "must exceed 1")
        if self.slots is not None and self.slots < MIN_SLOTS:
            raise InvalidParameterError("slots", self.slots, f"must be >= {MIN_SLOTS}")
        if self.max_slots < MIN_SLOTS:
            raise InvalidParameterError("max_slots", self.max_slots, f"must be >= {MIN_SLOTS}")


@dataclass
class ScaTrace:
    """Per-iteration record; entry 0 is the starting trajectory."""

    objectives: list[float] = field(default_factory=list)
    residuals: list[float] = field(default_factory=list)
    slack_residuals: list[tuple[float, ...]] = field(default_factory=list)
    subproblem_gaps: list[float] = field(default_factory=list)
    kkt_residuals: list[float] = field(default_factory=list)
    degraded: bool = False
    duration: float = 0.0
    slots: int = 0
    stopped_by: str = ""
    windows: dict[float, float] = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return len(self.objectives) - 1

    def is_monotone(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.diff(np.asarray(self.objectives)) <= tol))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["iter", "objective_J", "max_residual"])
        for i, (obj, res) in enumerate(zip(self.objectives, self.residuals)):
            writer.writerow([i, repr(float(obj)), repr(float(res))])
        return buf.getvalue()


def product_upper_bound(x, y, x0, y0):
    """Convex majorant of ``x*y``, tight at ``(x0, y0)``.

    Uses ``xy = ((x+y)^2 - (x-y)^2)/4`` and replaces ``-(x-y)^2`` by its tangent.
    """
    x, y, x0, y0 = (np.asarray(t, dtype=float) for t in (x, y, x0, y0))
    d0 = x0 - y0
    out = ((x + y) ** 2 - 2.0 * d0 * (x - y) + d0 * d0) / 4.0
    return out if out.ndim else float(out)


def _radical_tangent(A0, v0, c4: float):
    """Coefficients ``(kA, kv, k0)`` of the tangent plane ``kA*A + kv*v + k0``."""
    root = np.sqrt(1.0 + A0 * A0 + c4 * c4 * v0**4)
    kA = A0 / root
    kv = 2.0 * c4 * c4 * v0**3 / root + 2.0 * c4 * v0
    k0 = root + c4 * v0 * v0 - kA * A0 - kv * v0
    return kA, kv, k0


def radical_lower_bound(A, v, A0, v0, c4: float):
    """Affine minorant of ``sqrt(1 + A^2 + c4^2 v^4) + c4 v^2``, tight at ``(A0, v0)``.

    Valid because the function is convex in ``(A, v)``.
    """
    A, v, A0, v0 = (np.asarray(t, dtype=float) for t in (A, v, A0, v0))
    kA, kv, k0 = _radical_tangent(A0, v0, c4)
    out = kA * A + kv * v + k0
    return out if out.ndim else float(out)


def radical(A, v, c4: float):
    return np.sqrt(1.0 + A * A + c4 * c4 * v**4) + c4 * v * v


# ----------------------------------------------------------------------------
# parametrized convex models, compiled once per (kind, N) and per thread

_models = threading.local()


def _cached(key, build):
    cache = getattr(_models, "cache", None)
    if cache is None:
        cache = _models.cache = {}
    if key not in cache:
        cache[key] = build()
    return cache[key]


def _difference_ops(slots: int) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """``dq_n = q_n - q_{n-1}`` and ``ddq_n = dq_n - dq_{n-1}`` (``dq_0 = 0``) for n = 1..N."""
    d1 = sp.diags([-np.ones(slots), np.ones(slots)], [0, 1], shape=(slots, slots + 1), format="csr")
    back = sp.identity(slots, format="csr") - sp.eye(slots, slots, k=-1, format="csr")
    return d1, (back @ d1).tocsr()


def _kinematic_constraints(q, dq, ddq, par):
    return [
        q[0] == 0,
        q[-2] == par["distance"],
        q[-1] == par["distance"],
        cp.abs(dq) <= par["v_cap"],
        cp.abs(ddq) <= par["a_cap"],
    ]


def _common_parameters(slots: int) -> dict[str, cp.Parameter]:
    return {
        "distance": cp.Parameter(),
        "v_cap": cp.Parameter(nonneg=True),
        "a_cap": cp.Parameter(nonneg=True),
    }


def _build_straight_model(slots: int) -> ConvexSubproblem:
    d1, d2 = _difference_ops(slots)
    q = cp.Variable(slots + 1)
    A = cp.Variable(slots)
    B = cp.Variable(slots)
    s = cp.Variable(slots)
    par = _common_parameters(slots)
    for name in ("w_v2", "w_s", "w_v3", "c2s", "c3s"):
        par[name] = cp.Parameter(nonneg=True)
    for name in ("lin_v", "lin_0", "k_v", "k_0"):
        par[name] = cp.Parameter(slots)
    par["k_A"] = cp.Parameter(slots, nonneg=True)
    dq = d1 @ q
    ddq = d2 @ q
    constraints = _kinematic_constraints(q, dq, ddq, par) + [
        A >= par["c2s"] * cp.square(dq) + par["c3s"] * ddq,
        A >= -par["c3s"] * ddq - cp.multiply(par["lin_v"], dq) + par["lin_0"],
        cp.square(B) <= cp.multiply(par["k_A"], A) + cp.multiply(par["k_v"], dq) + par["k_0"],
        # 1 + A^2 <= s * B
        cp.SOC(s + B, cp.vstack([2.0 * np.ones(slots), 2.0 * A, s - B]), axis=0),
    ]
    objective = (
        par["w_v2"] * cp.sum_squares(dq) + par["w_s"] * cp.sum(s) + par["w_v3"] * cp.sum(cp.power(cp.abs(dq), 3))
    )
    problem = cp.Problem(cp.Minimize(objective), constraints)
    return ConvexSubproblem(problem, {"q": q, "A": A, "B": B}, par)


def _build_vertical_model(slots: int) -> ConvexSubproblem:
    d1, d2 = _difference_ops(slots)
    q = cp.Variable(slots + 1)
    X = cp.Variable(slots)
    par = _common_parameters(slots)
    for name in ("w_x", "inv_step2"):
        par[name] = cp.Parameter(nonneg=True)
    for name in ("sq_a", "sq_x", "coef_a"):
        par[name] = cp.Parameter()
    for name in ("tan_a", "tan_x", "two_xj", "rhs_0"):
        par[name] = cp.Parameter(slots)
    dq = d1 @ q
    ddq = d2 @ q
    constraints = _kinematic_constraints(q, dq, ddq, par) + [
        par["inv_step2"] * cp.square(dq) + par["coef_a"] * ddq <= cp.multiply(par["two_xj"], X) + par["rhs_0"],
    ]
    objective = (
        par["w_x"] * cp.sum(X)
        + cp.sum_squares(par["sq_a"] * ddq + par["sq_x"] * X)
        + cp.sum(cp.multiply(par["tan_a"], ddq) + cp.multiply(par["tan_x"], X))
    )
    problem = cp.Problem(cp.Minimize(objective), constraints)
    return ConvexSubproblem(problem, {"q": q, "X": X}, par)


# ----------------------------------------------------------------------------
# segments


class _Segment:
    def __init__(self, distance: float, slots: int, step: float, limits: KinematicLimits):
        self.distance = float(distance)
        self.slots = slots
        self.step = float(step)
        self.limits = limits

    def trajectory(self, q: np.ndarray) -> DiscreteTrajectory:
        return DiscreteTrajectory.from_positions(q, self.step)

    def kinematics(self, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        t = self.trajectory(q)
        return t.velocities[1:], t.accels[1:]

    def _set_common(self) -> None:
        d = self.step
        self.model.set(distance=self.distance, v_cap=self.limits.v_max * d, a_cap=self.limits.a_max * d * d)

    def snap(self, q: np.ndarray) -> np.ndarray:
        q = np.array(q, dtype=float)
        q[0] = 0.0
        q[-2:] = self.distance
        return q


class _StraightSegment(_Segment):
    def __init__(self, distance, slots, step, limits, consts: PowerConstants):
        super().__init__(distance, slots, step, limits)
        self.consts = consts
        self.model = _cached(("straight", slots), lambda: _build_straight_model(slots))
        c, d = consts, self.step
        self._set_common()
        self.model.set(
            w_v2=c.p0_watt * c.c1 / d,
            w_s=c.p1_watt * d,
            w_v3=c.c5 / (d * d),
            c2s=c.c2 / (d * d),
            c3s=c.c3 / (d * d),
        )
        self.model.constant = c.p0_watt * slots * d

    def energy(self, q: np.ndarray) -> float:
        return straight_energy(self.trajectory(q), self.consts)

    def linearize(self, q: np.ndarray) -> None:
        c, d = self.consts, self.step
        v, a = self.kinematics(q)
        A0 = np.maximum(np.abs(c.c2 * v * v + c.c3 * a), 1e-12)
        kA, kv, k0 = _radical_tangent(A0, v, c.c4)
        self.model.set(lin_v=2 * c.c2 * v / d, lin_0=c.c2 * v * v, k_A=kA, k_v=kv / d, k_0=k0)

    def slack_residuals(self, values: dict) -> tuple[float, float]:
        c = self.consts
        v, a = self.kinematics(self.snap(values["q"]))
        A, B = values["A"], values["B"]
        res_a = np.max(np.abs(A - np.abs(c.c2 * v * v + c.c3 * a)))
        res_b = np.max(np.abs(np.sqrt(radical(A, v, c.c4)) - B))
        return float(res_a), float(res_b)


class _VerticalSegment(_Segment):
    def __init__(self, distance, slots, step, limits, consts, airframe: AirframeParams, direction: Direction):
        super().__init__(distance, slots, step, limits)
        if limits.a_max >= airframe.gravity:
            raise ModelDomainError("vertical flight needs a_max below gravity")
        if direction not in ("descent", "climb"):
            raise InvalidParameterError("direction", direction, "must be 'descent' or 'climb'")
        self.consts = consts
        self.airframe = airframe
        self.direction = direction
        self.sign = -1.0 if direction == "descent" else 1.0
        self.rho_a = airframe.air_density * airframe.rotor_disc_area
        self.model = _cached(("vertical", slots), lambda: _build_vertical_model(slots))
        d, m, s = self.step, airframe.mass_kg, self.sign
        self._set_common()
        # slot term  d*(W X/2 + (m/2) * ub(s*a, X)),  a = ddq/d^2
        root = math.sqrt(m / 8.0)
        self.model.set(
            w_x=0.5 * airframe.weight_newton * d,
            sq_a=root * s / d**1.5,
            sq_x=root * math.sqrt(d),
            inv_step2=1.0 / (d * d),
            coef_a=2.0 * s * m / (self.rho_a * d * d),
        )

    def slack(self, v, a):
        thrust = self.airframe.weight_newton + self.sign * self.airframe.mass_kg * a
        return np.sqrt(v * v + 2.0 * thrust / self.rho_a)

    def energy(self, q: np.ndarray) -> float:
        return vertical_energy(self.trajectory(q), self.direction, self.consts, self.airframe)

    def linearize(self, q: np.ndarray) -> None:
        af, d, s = self.airframe, self.step, self.sign
        v, a = self.kinematics(q)
        X0 = self.slack(v, a)
        d0 = s * a - X0
        quarter_m = af.mass_kg / 4.0
        self.model.set(
            tan_a=-quarter_m * s * d0 / d,
            tan_x=quarter_m * d0 * d,
            two_xj=2.0 * X0,
            rhs_0=-X0 * X0 - 2.0 * af.weight_newton / self.rho_a,
        )
        self.model.constant = (
            self.consts.p2_watt * self.slots * d
            + 0.5 * af.weight_newton * self.distance
            + d * af.mass_kg / 8.0 * float(np.sum(d0 * d0))
        )

    def slack_residuals(self, values: dict) -> tuple[float]:
        v, a = self.kinematics(self.snap(values["q"]))
        return (float(np.max(np.abs(values["X"] - self.slack(v, a)))),)


def solve_linearized(
    distance: float,
    slots: int,
    step: float,
    limits: KinematicLimits,
    consts: PowerConstants,
    q_lin,
    *,
    airframe: AirframeParams | None = None,
    direction: Direction | None = None,
    tol: float = 1e-8,
) -> SubproblemResult:
    """One convexified subproblem linearized at positions ``q_lin`` (straight unless ``direction`` is set)."""
    if direction is None:
        segment: _Segment = _StraightSegment(distance, slots, step, limits, consts)
    else:
        segment = _VerticalSegment(distance, slots, step, limits, consts, airframe or AirframeParams(), direction)
    q = segment.snap(np.asarray(q_lin, dtype=float))
    if q.size != slots + 1:
        raise InvalidParameterError("q_lin", q.size, f"must have {slots + 1} positions")
    segment.linearize(q)
    return solve_convex_subproblem(segment.model, tol=tol)


def _run_sca(segment: _Segment, q_start: np.ndarray, settings: ScaSettings) -> tuple[np.ndarray, ScaTrace]:
    trace = ScaTrace(duration=segment.slots * segment.step, slots=segment.slots)
    q = segment.snap(q_start)
    energy = segment.energy(q)
    trace.objectives.append(energy)
    trace.residuals.append(0.0)
    trace.slack_residuals.append(())
    trace.stopped_by = "max_outer_iters"
    for _ in range(settings.max_outer_iters):
        segment.linearize(q)
        try:
            result = solve_convex_subproblem(segment.model, tol=settings.subproblem_kkt_tol)
        except SolverError as exc:
            raise SolverError(f"SCA subproblem failed: {exc}", trace) from exc
        trace.degraded |= result.degraded
        q_new = segment.snap(result.values["q"])
        try:
            energy_new = segment.energy(q_new)
        except ModelDomainError as exc:
            raise SolverError(f"subproblem left the model domain: {exc}", trace) from exc
        if not math.isfinite(energy_new) or energy_new > energy:
            # reachable only through subproblem round-off near convergence; keep the better iterate
            trace.stopped_by = "no_descent"
            break
        residuals = segment.slack_residuals(result.values)
        trace.objectives.append(energy_new)
        trace.slack_residuals.append(residuals)
        trace.residuals.append(max(residuals))
        trace.subproblem_gaps.append(result.duality_gap)
        trace.kkt_residuals.append(result.kkt_residual)
        decrease = energy - energy_new
        q, energy = q_new, energy_new
        if decrease <= settings.objective_tol * max(abs(energy), 1e-12):
            trace.stopped_by = "objective_tol"
            break
    return q, trace


def strip_padding(traj: DiscreteTrajectory, target: float) -> DiscreteTrajectory:
    """Drop trailing zero-motion slots at the target, keeping a single rest slot."""
    v, q = traj.velocities, traj.positions
    padding = (np.abs(v) < PAD_SPEED) & (np.abs(q - target) < PAD_DISTANCE)
    padding[0] = False
    last = traj.slots
    while last > 1 and padding[last - 1]:
        last -= 1
    if last == traj.slots:
        return traj
    positions = np.array(q[: last + 1])
    positions[-2:] = target
    return DiscreteTrajectory.from_positions(positions, traj.step, meta={"padding_slots": traj.slots - last})


def _finish(segment: _Segment, q: np.ndarray, trace: ScaTrace, energy_fn) -> tuple[DiscreteTrajectory, float]:
    full = segment.trajectory(q)
    trimmed = strip_padding(full, segment.distance)
    if trimmed is not full and not validate(trimmed, segment.limits, (0.0, segment.distance)):
        trimmed = full
    meta = dict(trimmed.meta, window=trace.duration, trace=trace, full_positions=full.positions)
    traj = DiscreteTrajectory.from_positions(trimmed.positions, trimmed.step, meta=meta)
    return traj, energy_fn(traj)


def _zero() -> DiscreteTrajectory:
    return DiscreteTrajectory.from_positions(np.zeros(3), 0.0)


def _window_slots(window: float, settings: ScaSettings) -> int:
    return settings.slots or max(MIN_SLOTS, default_slots(window, settings.step, settings.max_slots))


def _start(profile: VelocityProfile, step: float, slots: int, warm_start) -> np.ndarray:
    if warm_start is None:
        return sample_profile(profile, step, slots).positions
    q = np.asarray(getattr(warm_start, "positions", warm_start), dtype=float)
    if q.size != slots + 1:
        raise InvalidParameterError("warm_start", q.size, f"must have {slots + 1} positions")
    return q


def _bound_window(profile: VelocityProfile, settings: ScaSettings, energy_of) -> float:
    """Window from the fly-time bound of the feasible profile, floored at a multiple of its duration."""
    if settings.fixed_duration_rule == "multiple_of_feasible":
        return settings.duration_multiple * profile.duration
    reference = discretize(profile, default_slots(profile.duration))
    bound = energy_of(reference)
    return max(bound, settings.min_window_multiple * profile.duration)


def _fixed_window(profile: VelocityProfile, settings: ScaSettings, bound) -> tuple[float, int]:
    upper = _bound_window(profile, settings, bound)
    slots = _window_slots(upper, settings)
    if settings.fixed_duration_rule == "shortest":
        return profile.duration * slots / (slots - 1), slots
    return upper, slots


def _search_window(profile: VelocityProfile, settings: ScaSettings, bound, run, cost):
    """Bounded scalar search over the window length on a fixed slot count.

    The lower end (feasible duration on the grid) is always evaluated, so the
    result never costs more than the feasible profile sampled on that grid.
    Returns the best ``run`` result; its trace records every window tried.
    """
    upper, slots = _fixed_window(profile, settings, bound)
    lower = profile.duration * slots / (slots - 1)
    runs: dict[float, tuple] = {}

    def total(window: float) -> float:
        window = float(window)
        if window not in runs:
            runs[window] = run(window, slots)
        return cost(runs[window])

    total(lower)
    if upper > lower * (1 + 1e-9):
        minimize_scalar(total, bounds=(lower, upper), method="bounded", options={"xatol": settings.search_tol * upper})
        total(upper)
    best = min(runs, key=lambda w: cost(runs[w]))
    result = runs[best]
    windows = {w: cost(r) for w, r in sorted(runs.items())}
    for trace in result[2] if isinstance(result[2], tuple) else (result[2],):
        trace.windows = windows
    return result


def optimize_straight(
    distance: float,
    limits: KinematicLimits,
    consts: PowerConstants,
    settings: ScaSettings | None = None,
    *,
    duration: float | None = None,
    warm_start=None,
) -> tuple[DiscreteTrajectory, float, ScaTrace]:
    """Minimum-energy rest-to-rest straight flight over ``distance`` metres.

    Returns the trajectory with trailing hover padding removed, its energy and
    the iteration trace of the selected window.  ``duration`` fixes the window
    (``warm_start`` positions on that grid may then replace the feasible start).
    """
    settings = settings or ScaSettings()
    if not (math.isfinite(distance) and distance >= 0):
        raise InvalidParameterError("distance", distance, "must be finite and >= 0")
    if distance == 0:
        return _zero(), 0.0, ScaTrace(objectives=[0.0], residuals=[0.0], stopped_by="zero_distance")
    profile = feasible_profile(distance, limits)

    def bound(traj):
        return fly_time_bound(straight_energy(traj, consts), consts)

    def run(window: float, slots: int, start=None):
        step = window / slots
        segment = _StraightSegment(distance, slots, step, limits, consts)
        q, trace = _run_sca(segment, _start(profile, step, slots, start), settings)
        return segment, q, trace

    if duration is not None or settings.fixed_duration_rule != "search":
        if duration is not None:
            window, slots = duration, _window_slots(duration, settings)
        else:
            window, slots = _fixed_window(profile, settings, bound)
        segment, q, trace = run(window, slots, warm_start)
    else:
        segment, q, trace = _search_window(profile, settings, bound, run, lambda r: r[2].objectives[-1])
    traj, energy = _finish(segment, q, trace, lambda t: straight_energy(t, consts))
    return traj, energy, trace


@dataclass
class VerticalResult:
    descent: DiscreteTrajectory
    climb: DiscreteTrajectory
    energy: float
    descent_energy: float
    climb_energy: float
    traces: tuple[ScaTrace, ScaTrace]

    def __iter__(self):
        # allows ``descent, climb, energy = optimize_vertical(...)``
        return iter((self.descent, self.climb, self.energy))


def vertical_window(
    height_drop: float,
    limits: KinematicLimits,
    consts: PowerConstants,
    airframe: AirframeParams,
    settings: ScaSettings | None = None,
) -> float:
    """Longest window considered for one vertical leg of ``height_drop`` metres."""
    settings = settings or ScaSettings()
    profile = feasible_profile(height_drop, limits)
    return _bound_window(profile, settings, _vertical_bound(consts, airframe))


def _vertical_bound(consts, airframe):
    def bound(traj):
        worst = max(vertical_energy(traj, d, consts, airframe) for d in ("descent", "climb"))
        return fly_time_bound(worst, consts)

    return bound


def optimize_vertical(
    height_drop: float,
    limits: KinematicLimits,
    consts: PowerConstants,
    airframe: AirframeParams,
    settings: ScaSettings | None = None,
    *,
    duration: float | None = None,
    slots: int | None = None,
    warm_start: tuple | None = None,
) -> VerticalResult:
    """Minimum-energy descent of ``height_drop`` metres and the matching climb.

    Positions run along the direction of travel from 0 to ``height_drop``.
    Each leg's energy includes its ``W * height_drop / 2`` boundary term.
    ``duration``/``slots`` fix the window grid (e.g. to share it across many
    heights); ``warm_start`` is a (descent, climb) pair of position arrays on
    that grid.  Unpacks as ``(descent, climb, energy)``.
    """
    settings = settings or ScaSettings()
    if not (math.isfinite(height_drop) and height_drop >= 0):
        raise InvalidParameterError("height_drop", height_drop, "must be finite and >= 0")
    if height_drop == 0:
        z = _zero()
        empty = ScaTrace(objectives=[0.0], residuals=[0.0], stopped_by="zero_distance")
        return VerticalResult(z, z, 0.0, 0.0, 0.0, (empty, empty))
    if slots is not None:
        settings = replace(settings, slots=slots)
    profile = feasible_profile(height_drop, limits)
    bound = _vertical_bound(consts, airframe)
    legs = []
    for i, direction in enumerate(("descent", "climb")):

        def run(window: float, n: int, start=None, direction=direction):
            step = window / n
            segment = _VerticalSegment(height_drop, n, step, limits, consts, airframe, direction)
            q, trace = _run_sca(segment, _start(profile, step, n, start), settings)
            return segment, q, trace

        leg_start = None if warm_start is None else warm_start[i]
        if duration is not None or settings.fixed_duration_rule != "search":
            if duration is not None:
                window, n = duration, _window_slots(duration, settings)
            else:
                window, n = _fixed_window(profile, settings, bound)
            segment, q, trace = run(window, n, leg_start)
        else:
            segment, q, trace = _search_window(profile, settings, bound, run, lambda r: r[2].objectives[-1])
        energy_of = lambda t, d=direction: vertical_energy(t, d, consts, airframe)  # noqa: E731
        legs.append((*_finish(segment, q, trace, energy_of), trace))
    (desc, e_d, t_d), (climb, e_c, t_c) = legs
    return VerticalResult(desc, climb, e_d + e_c, e_d, e_c, (t_d, t_c))
