"""Rotary-wing propulsion power and energy for straight and vertical flight.

Power is evaluated per time slot from the slot's (speed, acceleration) pair;
energies are left-endpoint rectangle sums over slots so that they coincide
with the discrete objectives optimized in :mod:`uavwpcn.trajectory_sca`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, fields
from typing import TYPE_CHECKING, Literal

import numpy as np

from .errors import InvalidParameterError, ModelDomainError

if TYPE_CHECKING:
    from .kinematics import DiscreteTrajectory

Direction = Literal["descent", "climb"]


@dataclass(frozen=True)
class AirframeParams:
    """Physical constants of the airframe (SI units). Defaults are the typical values."""

    weight_newton: float = 20.0
    air_density: float = 1.225
    flat_plate_area: float = 0.0151
    rotor_radius: float = 0.4
    rotor_disc_area: float = 0.503
    blade_angular_velocity: float = 300.0
    fuselage_drag_ratio: float = 0.6
    rotor_solidity: float = 0.05
    profile_drag_coeff: float = 0.012
    induced_power_factor: float = 0.1
    mass_kg: float = 2.04
    gravity: float = 9.8

    def __post_init__(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise InvalidParameterError(f.name, value)
        implied = self.mass_kg * self.gravity
        if abs(self.weight_newton - implied) > 0.02 * implied:
            warnings.warn(
                f"weight_newton={self.weight_newton} differs from mass*gravity={implied:.4g} by more than 2%",
                stacklevel=3,
            )


@dataclass(frozen=True)
class PowerConstants:
    p0_watt: float
    p1_watt: float
    p2_watt: float
    c1: float
    c2: float
    c3: float
    c4: float
    c5: float

    @property
    def hover_watt(self) -> float:
        return self.p0_watt + self.p1_watt


def derive_constants(airframe: AirframeParams) -> PowerConstants:
    """Closed-form blade-profile, induced and parasite power constants."""
    a = airframe
    rho, area, w = a.air_density, a.rotor_disc_area, a.weight_newton
    tip = a.blade_angular_velocity * a.rotor_radius
    p0 = a.profile_drag_coeff / 8.0 * rho * a.rotor_solidity * area * tip**3
    induced = w**1.5 / math.sqrt(2.0 * rho * area)
    return PowerConstants(
        p0_watt=p0,
        p1_watt=(1.0 + a.induced_power_factor) * induced,
        p2_watt=p0 + a.induced_power_factor * induced,
        c1=3.0 / tip**2,
        c2=rho * a.flat_plate_area / (2.0 * w),
        c3=a.mass_kg / w,
        c4=rho * area / w,
        c5=0.5 * a.fuselage_drag_ratio * rho * a.rotor_solidity * area,
    )


def _check_speed(speed: np.ndarray) -> None:
    if np.any(speed < 0) or not np.all(np.isfinite(speed)):
        raise InvalidParameterError("speed", speed.min() if speed.size else speed, "must be finite and >= 0")


def straight_power(speed, accel, consts: PowerConstants):
    """Level-flight propulsion power at speed ``speed`` and along-track acceleration ``accel``.

    Accepts scalars or arrays (broadcast); returns watts with the same shape.
    """
    v = np.asarray(speed, dtype=float)
    a = np.asarray(accel, dtype=float)
    _check_speed(v)
    c = consts
    v2 = v * v
    g = 1.0 + (c.c2 * v2 + c.c3 * a) ** 2
    c4v2 = c.c4 * v2
    root = np.sqrt(g + c4v2 * c4v2)
    # sqrt(root - c4v2) == sqrt(g / (root + c4v2)); the latter avoids cancellation at high speed
    induced = c.p1_watt * g / np.sqrt(root + c4v2)
    p = c.p0_watt * (1.0 + c.c1 * v2) + induced + c.c5 * v2 * v
    return p if p.ndim else float(p)


def _thrust(accel: np.ndarray, direction: Direction, airframe: AirframeParams) -> np.ndarray:
    if direction not in ("descent", "climb"):
        raise InvalidParameterError("direction", direction, "must be 'descent' or 'climb'")
    if np.any(np.abs(accel) >= airframe.gravity):
        raise ModelDomainError(
            f"|accel| must be below gravity ({airframe.gravity} m/s^2) for vertical flight"
        )
    sign = -1.0 if direction == "descent" else 1.0
    return airframe.weight_newton + sign * airframe.mass_kg * accel


def vertical_power(speed, accel, direction: Direction, consts: PowerConstants, airframe: AirframeParams):
    """Vertical descent/climb power; thrust is W - m*a for descent and W + m*a for climb."""
    v = np.asarray(speed, dtype=float)
    a = np.asarray(accel, dtype=float)
    _check_speed(v)
    t = _thrust(a, direction, airframe)
    rho_a = airframe.air_density * airframe.rotor_disc_area
    p = consts.p2_watt + 0.5 * t * v + 0.5 * t * np.sqrt(v * v + 2.0 * t / rho_a)
    return p if p.ndim else float(p)


def straight_energy(traj: DiscreteTrajectory, consts: PowerConstants) -> float:
    """Rectangle-rule energy sum over slots 1..N."""
    v = np.abs(traj.velocities[1:])
    a = traj.accels[1:]
    return float(traj.step * np.sum(straight_power(v, a, consts)))


def vertical_energy(
    traj: DiscreteTrajectory, direction: Direction, consts: PowerConstants, airframe: AirframeParams
) -> float:
    """Vertical-flight energy via the integrated boundary terms plus the slot-summed radical term.

    ``P2*T + W*(q_N - q_0)/2 -/+ m*(v_N^2 - v_0^2)/4 + sum(delta * T_n/2 * sqrt(v_n^2 + 2 T_n/(rho A)))``
    with the minus sign for descent.
    """
    v = traj.velocities
    a = traj.accels[1:]
    t = _thrust(a, direction, airframe)
    rho_a = airframe.air_density * airframe.rotor_disc_area
    radical = 0.5 * t * np.sqrt(v[1:] ** 2 + 2.0 * t / rho_a)
    sign = -1.0 if direction == "descent" else 1.0
    boundary = (
        consts.p2_watt * traj.duration
        + 0.5 * airframe.weight_newton * (traj.positions[-1] - traj.positions[0])
        + sign * 0.25 * airframe.mass_kg * (v[-1] ** 2 - v[0] ** 2)
    )
    return float(boundary + traj.step * np.sum(radical))
