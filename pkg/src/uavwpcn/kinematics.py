"""One-dimensional rest-to-rest motion: feasible profiles, discretization, validation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import InvalidParameterError
from .propulsion import PowerConstants

DEFAULT_STEP = 0.25
MAX_SLOTS = 400


@dataclass(frozen=True)
class KinematicLimits:
    v_max: float = 30.0
    a_max: float = 5.0

    def __post_init__(self) -> None:
        for name in ("v_max", "a_max"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidParameterError(name, value)


@dataclass(frozen=True)
class VelocityProfile:
    """Accelerate at ``accel``, optionally cruise at ``peak_speed``, brake at ``accel``."""

    shape: Literal["triangle", "trapezoid"]
    distance: float
    duration: float
    peak_speed: float
    accel: float

    def position(self, t):
        """Travelled distance at time(s) ``t``; clamped to [0, distance] outside [0, duration]."""
        t = np.clip(np.asarray(t, dtype=float), 0.0, self.duration)
        if self.distance == 0.0:
            return np.zeros_like(t)
        ramp = self.peak_speed / self.accel
        rise = 0.5 * self.accel * t**2
        fall = self.distance - 0.5 * self.accel * (self.duration - t) ** 2
        cruise = 0.5 * self.accel * ramp**2 + self.peak_speed * (t - ramp)
        return np.where(t <= ramp, rise, np.where(t >= self.duration - ramp, fall, cruise))

    def speed(self, t):
        t = np.clip(np.asarray(t, dtype=float), 0.0, self.duration)
        return np.minimum(np.minimum(self.accel * t, self.accel * (self.duration - t)), self.peak_speed)

    def acceleration(self, t):
        t = np.asarray(t, dtype=float)
        ramp = self.peak_speed / self.accel if self.accel else 0.0
        inside = (t >= 0) & (t <= self.duration)
        up = t < ramp
        down = t > self.duration - ramp
        # at the triangle apex both ramps meet; the midpoint is assigned to braking
        return np.where(inside, np.where(up & ~down, self.accel, np.where(down, -self.accel, 0.0)), 0.0)


@dataclass(frozen=True)
class DiscreteTrajectory:
    """Sampled path with ``v_n = (q_n - q_{n-1})/step`` and ``a_n = (v_n - v_{n-1})/step``.

    Index 0 holds the boundary values ``v_0`` and ``a_0``; slots are 1..N.
    """

    step: float
    positions: np.ndarray
    velocities: np.ndarray
    accels: np.ndarray
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self) -> None:
        arrays = [np.array(x, dtype=float) for x in (self.positions, self.velocities, self.accels)]
        if len({a.shape for a in arrays}) != 1 or arrays[0].ndim != 1 or arrays[0].size < 1:
            raise InvalidParameterError("trajectory", [a.shape for a in arrays], "arrays must be 1-D and equal length")
        if not all(np.all(np.isfinite(a)) for a in arrays):
            raise InvalidParameterError("trajectory", "non-finite", "values must be finite")
        if not (math.isfinite(self.step) and self.step >= 0):
            raise InvalidParameterError("step", self.step, "must be >= 0")
        if self.step == 0 and (np.any(arrays[1]) or np.any(arrays[2]) or np.ptp(arrays[0]) > 0):
            raise InvalidParameterError("step", self.step, "zero step only allowed for a motionless trajectory")
        for a in arrays:
            a.flags.writeable = False
        object.__setattr__(self, "positions", arrays[0])
        object.__setattr__(self, "velocities", arrays[1])
        object.__setattr__(self, "accels", arrays[2])

    @classmethod
    def from_positions(cls, positions, step: float, v0: float = 0.0, meta: dict | None = None) -> DiscreteTrajectory:
        q = np.asarray(positions, dtype=float)
        v = np.empty_like(q)
        a = np.empty_like(q)
        v[0] = v0
        a[0] = 0.0
        if step > 0:
            v[1:] = (q[1:] - q[:-1]) / step
            a[1:] = (v[1:] - v[:-1]) / step
        else:
            v[1:] = 0.0
            a[1:] = 0.0
        return cls(step, q, v, a, meta or {})

    @classmethod
    def stationary(cls, duration: float, slots: int, position: float = 0.0) -> DiscreteTrajectory:
        return cls.from_positions(np.full(slots + 1, position), duration / slots)

    @property
    def slots(self) -> int:
        return self.positions.size - 1

    @property
    def duration(self) -> float:
        return self.step * self.slots


@dataclass(frozen=True)
class Violation:
    kind: str
    index: int
    magnitude: float


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}


def feasible_profile(distance: float, limits: KinematicLimits) -> VelocityProfile:
    """Max-acceleration triangle, or trapezoid with a cruise phase at ``v_max`` for long hops."""
    if not (math.isfinite(distance) and distance >= 0):
        raise InvalidParameterError("distance", distance, "must be finite and >= 0")
    v, a = limits.v_max, limits.a_max
    if distance < v * v / a:
        half = math.sqrt(distance / a)
        return VelocityProfile("triangle", distance, 2.0 * half, a * half, a)
    return VelocityProfile("trapezoid", distance, distance / v + v / a, v, a)


def default_slots(duration: float, step: float = DEFAULT_STEP, cap: int = MAX_SLOTS) -> int:
    return int(min(cap, max(2, math.ceil(duration / step))))


def sample_profile(profile: VelocityProfile, step: float, slots: int) -> DiscreteTrajectory:
    """Sample positions at slot boundaries ``n*step``; after the profile ends the vehicle rests."""
    if slots < 2:
        raise InvalidParameterError("slots", slots, "must be >= 2")
    if profile.distance == 0.0:
        return DiscreteTrajectory.from_positions(np.zeros(slots + 1), step)
    if profile.duration > (slots - 1) * step * (1 + 1e-12):
        raise InvalidParameterError("step", step, "time grid too short to finish the profile at rest")
    q = profile.position(np.arange(slots + 1) * step)
    q[-1] = profile.distance
    return DiscreteTrajectory.from_positions(q, step)


def discretize(profile: VelocityProfile, slots: int) -> DiscreteTrajectory:
    """Sample ``profile`` on ``slots`` slots; the last slot is the rest slot (``v_N = 0``).

    The profile spans the first ``slots - 1`` slots, so the endpoint is exact.
    """
    if slots < 2:
        raise InvalidParameterError("slots", slots, "must be >= 2")
    if profile.distance == 0.0:
        return DiscreteTrajectory.from_positions(np.zeros(slots + 1), 0.0)
    return sample_profile(profile, profile.duration / (slots - 1), slots)


def validate(
    traj: DiscreteTrajectory,
    limits: KinematicLimits,
    endpoints: tuple[float, float],
    rest_to_rest: bool = True,
    *,
    tol: float = 1e-7,
    endpoint_tol: float = 1e-6,
) -> ValidationReport:
    """Collect every violated kinematic or boundary constraint."""
    report = ValidationReport()
    add = report.violations.append
    q, v, a = traj.positions, traj.velocities, traj.accels
    if traj.step > 0:
        v_fd = (q[1:] - q[:-1]) / traj.step
        a_fd = (v[1:] - v[:-1]) / traj.step
        scale_v = max(1.0, float(np.max(np.abs(v))))
        scale_a = max(1.0, float(np.max(np.abs(a))))
        for i in np.flatnonzero(np.abs(v_fd - v[1:]) > 1e-9 * scale_v):
            add(Violation("velocity_identity", int(i) + 1, float(abs(v_fd[i] - v[i + 1]))))
        for i in np.flatnonzero(np.abs(a_fd - a[1:]) > 1e-9 * scale_a):
            add(Violation("accel_identity", int(i) + 1, float(abs(a_fd[i] - a[i + 1]))))
    over_v = np.abs(v) - limits.v_max
    for i in np.flatnonzero(over_v > tol * limits.v_max):
        add(Violation("velocity", int(i), float(over_v[i])))
    over_a = np.abs(a) - limits.a_max
    for i in np.flatnonzero(over_a > tol * limits.a_max):
        add(Violation("acceleration", int(i), float(over_a[i])))
    start, end = endpoints
    if abs(q[0] - start) > endpoint_tol:
        add(Violation("start", 0, float(abs(q[0] - start))))
    if abs(q[-1] - end) > endpoint_tol:
        add(Violation("end", traj.slots, float(abs(q[-1] - end))))
    if rest_to_rest:
        if abs(v[0]) > tol:
            add(Violation("rest_start", 0, float(abs(v[0]))))
        if abs(v[-1]) > tol:
            add(Violation("rest_end", traj.slots, float(abs(v[-1]))))
    return report


def fly_time_bound(feasible_energy: float, consts: PowerConstants) -> float:
    """Fly-time bound: energy of a feasible trajectory divided by hover power."""
    if not (math.isfinite(feasible_energy) and feasible_energy > 0):
        raise InvalidParameterError("feasible_energy", feasible_energy)
    return feasible_energy / consts.hover_watt
