"""Hover-phase energy transfer and data collection for one ground user.

Half duplex (HD): the UAV broadcasts energy for ``t31`` seconds, then the user
transmits for ``t32`` seconds using only harvested energy.  Full duplex (FD):
the UAV broadcasts for the whole hover ``t3`` while the user, after a circuit
start-up delay, transmits for ``t3 - delay`` seconds against the UAV's
self-interference.  Both minimize hover time subject to the user's demand and
energy neutrality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import InfeasibleError, InfeasibleHeightError, InvalidParameterError, ModelDomainError

Mode = Literal["HD", "FD"]
LN2 = math.log(2.0)


def dbm_per_hz_to_watt(value_dbm: float) -> float:
    return 10.0 ** (value_dbm / 10.0) / 1e3


def watt_to_dbm_per_hz(value_w: float) -> float:
    return 10.0 * math.log10(value_w * 1e3)


def db_to_ratio(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def ratio_to_db(value: float) -> float:
    return 10.0 * math.log10(value)


def _positive(name: str, value: float) -> None:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise InvalidParameterError(name, value)


@dataclass(frozen=True)
class ChannelParams:
    beta0: float = 1.42e-4
    alpha: float = 2.3
    kappa_nlos: float = 0.2
    c1_env: float = 10.0
    c2_env: float = 0.6
    elevation_deg: float = 90.0

    def __post_init__(self) -> None:
        _positive("beta0", self.beta0)
        _positive("alpha", self.alpha)
        if not (0 < self.kappa_nlos <= 1):
            raise InvalidParameterError("kappa_nlos", self.kappa_nlos, "must be in (0, 1]")
        for name in ("c1_env", "c2_env"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise InvalidParameterError(name, value, "must be finite and >= 0")
        if self.elevation_deg != 90.0:
            raise InvalidParameterError("elevation_deg", self.elevation_deg, "the UAV hovers directly above the user (90)")

    @property
    def gain_coefficient(self) -> float:
        """``b`` in ``E[g] = b * h^-alpha``."""
        a = los_probability(self)
        return (a + self.kappa_nlos * (1.0 - a)) * self.beta0


@dataclass(frozen=True)
class RadioParams:
    uav_tx_power: float = 1.0
    bandwidth: float = 20e6
    noise_psd: float = dbm_per_hz_to_watt(-174.0)
    harvest_efficiency: float = 0.9
    self_interference: float = db_to_ratio(-100.0)

    def __post_init__(self) -> None:
        for name in ("uav_tx_power", "bandwidth", "noise_psd", "self_interference"):
            _positive(name, getattr(self, name))
        if not (0 < self.harvest_efficiency < 1):
            raise InvalidParameterError("harvest_efficiency", self.harvest_efficiency, "must be in (0, 1)")

    @property
    def noise_power(self) -> float:
        return self.noise_psd * self.bandwidth


@dataclass(frozen=True)
class UserComm:
    demand_bits: float = 1e6
    rx_circuit_power: float = 1e-6
    tx_circuit_power: float = 1e-3
    pa_efficiency: float = 0.9
    circuit_delay: float = 2.0

    def __post_init__(self) -> None:
        _positive("demand_bits", self.demand_bits)
        if not (0 < self.pa_efficiency <= 1):
            raise InvalidParameterError("pa_efficiency", self.pa_efficiency, "must be in (0, 1]")
        for name in ("rx_circuit_power", "tx_circuit_power", "circuit_delay"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise InvalidParameterError(name, value, "must be finite and >= 0")


@dataclass(frozen=True)
class HoverSolution:
    """Optimal hover schedule for one user.

    For FD the harvest window is the whole hover and ``time_split`` is 1.
    ``harvested_energy``/``consumed_energy`` are the user's energy budget terms.
    """

    mode: Mode
    height: float
    hover_time: float
    harvest_time: float
    transmit_time: float
    time_split: float
    user_tx_power: float
    hover_energy: float
    harvested_energy: float
    consumed_energy: float
    delivered_bits: float
    aux: tuple[float, ...] = field(default=())


# ----------------------------------------------------------------------------
# channel


def los_probability(channel: ChannelParams) -> float:
    """Line-of-sight probability at the channel's elevation angle."""
    return 1.0 / (1.0 + channel.c1_env * math.exp(-channel.c2_env * (channel.elevation_deg - channel.c1_env)))


def expected_channel_gain(height: float, channel: ChannelParams) -> float:
    if not (math.isfinite(height) and height > 0):
        raise InvalidParameterError("height", height, "must be finite and > 0")
    return channel.gain_coefficient * height ** (-channel.alpha)


# ----------------------------------------------------------------------------
# Lambert W


def lambert_w0(x: float, *, max_iter: int = 100) -> float:
    """Principal branch of the Lambert W function by Halley iteration."""
    x = float(x)
    branch = -1.0 / math.e
    if not math.isfinite(x) or x < branch:
        raise ModelDomainError(f"lambert_w0 is defined for finite x >= -1/e, got {x!r}")
    if x == 0.0:
        return 0.0
    if x - branch < 1e-14:
        return -1.0
    if x < -0.25:
        p = math.sqrt(2.0 * (math.e * x + 1.0))
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p**3
    elif x < 3.0:
        w = math.log1p(x) * (1.0 - math.log1p(math.log1p(x)) / (2.0 + math.log1p(x)))
    else:
        lx = math.log(x)
        w = lx - math.log(lx) + math.log(lx) / lx
    tol = 1e-12 * max(1.0, abs(x))
    for _ in range(max_iter):
        ew = math.exp(w)
        f = w * ew - x
        if abs(f) <= tol:
            break
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w -= step
        if abs(step) <= 1e-16 * max(1.0, abs(w)):
            break
    return w


# ----------------------------------------------------------------------------
# height bounds


def height_bound(mode: Mode, channel: ChannelParams, radio: RadioParams, user: UserComm) -> float:
    """Height above which harvested power cannot cover the user's circuit power.

    HD needs ``zeta P g > p_re``; FD (negligible start-up delay) needs
    ``zeta P g > p_re + p_tr``.
    """
    mode = _mode(mode)
    circuit = user.rx_circuit_power + (user.tx_circuit_power if mode == "FD" else 0.0)
    if circuit == 0:
        return math.inf
    return (radio.harvest_efficiency * radio.uav_tx_power * channel.gain_coefficient / circuit) ** (1.0 / channel.alpha)


def _mode(mode: str) -> Mode:
    upper = str(mode).upper()
    if upper not in ("HD", "FD"):
        raise InvalidParameterError("mode", mode, "must be HD or FD")
    return upper  # type: ignore[return-value]


def hover_power(consts) -> float:
    return consts.hover_watt


# ----------------------------------------------------------------------------
# half duplex


def hd_coefficients(height: float, channel: ChannelParams, radio: RadioParams, user: UserComm) -> tuple[float, float]:
    """``(u1, u2)`` with the rate constraint reading ``t32 log2(u1 + u2 t31/t32) = D/B``."""
    g = expected_channel_gain(height, channel)
    snr_per_watt = g / radio.noise_power
    eps = user.pa_efficiency
    u1 = 1.0 - eps * user.tx_circuit_power * snr_per_watt
    u2 = eps * (radio.harvest_efficiency * radio.uav_tx_power * g - user.rx_circuit_power) * snr_per_watt
    return u1, u2


def _hd_solution(height, channel, radio, user, t31, t32, hover_watt, aux=()) -> HoverSolution:
    g = expected_channel_gain(height, channel)
    eps = user.pa_efficiency
    harvest_power = radio.harvest_efficiency * radio.uav_tx_power * g
    p = eps * (harvest_power - user.rx_circuit_power) * t31 / t32 - eps * user.tx_circuit_power
    t3 = t31 + t32
    harvested = harvest_power * t31
    consumed = user.rx_circuit_power * t31 + (p / eps + user.tx_circuit_power) * t32
    bits = radio.bandwidth * t32 * math.log2(1.0 + p * g / radio.noise_power)
    return HoverSolution(
        mode="HD",
        height=height,
        hover_time=t3,
        harvest_time=t31,
        transmit_time=t32,
        time_split=t31 / t3,
        user_tx_power=p,
        hover_energy=hover_watt * t3,
        harvested_energy=harvested,
        consumed_energy=consumed,
        delivered_bits=bits,
        aux=aux,
    )


def _check_hd_height(height, channel, radio, user) -> None:
    bound = height_bound("HD", channel, radio, user)
    if not height < bound:
        raise InfeasibleHeightError(height, bound, "HD")


def solve_hd(
    height: float, channel: ChannelParams, radio: RadioParams, user: UserComm, hover_watt: float = 168.48
) -> HoverSolution:
    """Minimum hover time in HD mode via the Lambert-W closed form.

    ``t32 = D ln2 / (B (W0((u2 - u1)/e) + 1))`` and
    ``t31 = (2^(D/(B t32)) - u1) t32 / u2``.
    """
    _check_hd_height(height, channel, radio, user)
    u1, u2 = hd_coefficients(height, channel, radio, user)
    if not u2 > 0:
        raise InfeasibleHeightError(height, height_bound("HD", channel, radio, user), "HD")
    c = user.demand_bits / radio.bandwidth
    t32 = c * LN2 / (lambert_w0((u2 - u1) / math.e) + 1.0)
    t31 = (2.0 ** (c / t32) - u1) * t32 / u2
    return _hd_solution(height, channel, radio, user, t31, t32, hover_watt, aux=(u1, u2))


def hd_hover_time(t32, height, channel, radio, user):
    """Total hover time ``t31(t32) + t32`` along the active rate/energy constraints."""
    u1, u2 = hd_coefficients(height, channel, radio, user)
    c = user.demand_bits / radio.bandwidth
    t32 = np.asarray(t32, dtype=float)
    with np.errstate(over="ignore"):
        return (np.exp2(c / t32) - u1) * t32 / u2 + t32


def oracle_hd_grid(
    height: float,
    channel: ChannelParams,
    radio: RadioParams,
    user: UserComm,
    grid_resolution: int = 121,
    *,
    rounds: int = 80,
    zoom_cells: int = 30,
    hover_watt: float = 168.48,
) -> HoverSolution:
    """Brute-force HD optimum over a logarithmic (t31, t32) grid with zooming.

    Works from the raw constraints (demand met, harvested >= consumed at the
    largest affordable transmit power) rather than the closed form.  Each round
    keeps ``zoom_cells`` cells either side of the best point; the optimum sits
    in a thin curved valley, so narrow windows stall early.
    """
    _check_hd_height(height, channel, radio, user)
    if grid_resolution < 5:
        raise InvalidParameterError("grid_resolution", grid_resolution, "must be >= 5")
    g = expected_channel_gain(height, channel)
    eps = user.pa_efficiency
    avail = radio.harvest_efficiency * radio.uav_tx_power * g - user.rx_circuit_power
    lo = np.log([1e-9, 1e-9])
    hi = np.log([1e5, 1e5])
    best = None
    for _ in range(rounds):
        a31 = np.exp(np.linspace(lo[0], hi[0], grid_resolution))
        a32 = np.exp(np.linspace(lo[1], hi[1], grid_resolution))
        t31, t32 = np.meshgrid(a31, a32, indexing="ij")
        p = eps * avail * t31 / t32 - eps * user.tx_circuit_power
        with np.errstate(invalid="ignore", divide="ignore"):
            bits = radio.bandwidth * t32 * np.log2(1.0 + np.maximum(p, 0.0) * g / radio.noise_power)
        feasible = (p > 0) & (bits >= user.demand_bits)
        if not feasible.any():
            if best is None:
                raise InfeasibleError("HD oracle found no feasible grid point")
            break
        total = np.where(feasible, t31 + t32, np.inf)
        i, j = np.unravel_index(np.argmin(total), total.shape)
        best = (float(t31[i, j]), float(t32[i, j]))
        step = (hi - lo) / (grid_resolution - 1)
        centre = np.log(best)
        lo, hi = centre - zoom_cells * step, centre + zoom_cells * step
        if np.all(step < 1e-10):
            break
    return _hd_solution(height, channel, radio, user, best[0], best[1], hover_watt)


# ----------------------------------------------------------------------------
# full duplex


def fd_lhs(t3, height: float, channel: ChannelParams, radio: RadioParams, user: UserComm):
    """Power gap (required minus affordable, scaled) as a function of hover time.

    Positive means the demand cannot be met within ``t3``; the optimal hover
    time is the smallest ``t3 > delay`` where this reaches zero.
    """
    g = expected_channel_gain(height, channel)
    eps = user.pa_efficiency
    c = user.demand_bits / radio.bandwidth
    k = (radio.self_interference * radio.uav_tx_power + radio.noise_power) / g
    x = radio.harvest_efficiency * radio.uav_tx_power * g - user.rx_circuit_power
    t3 = np.asarray(t3, dtype=float)
    s = t3 - user.circuit_delay
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        out = (np.exp2(c / s) - 1.0) * k - eps * x * t3 / s + eps * user.tx_circuit_power
    out = np.where(s > 0, out, np.inf)
    return out if out.ndim else float(out)


def _fd_solution(height, channel, radio, user, t3, hover_watt) -> HoverSolution:
    g = expected_channel_gain(height, channel)
    eps = user.pa_efficiency
    s = t3 - user.circuit_delay
    harvest_power = radio.harvest_efficiency * radio.uav_tx_power * g
    p = eps * ((harvest_power - user.rx_circuit_power) * t3 / s - user.tx_circuit_power)
    interference = radio.self_interference * radio.uav_tx_power + radio.noise_power
    harvested = harvest_power * t3
    consumed = user.rx_circuit_power * t3 + (p / eps + user.tx_circuit_power) * s
    bits = radio.bandwidth * s * math.log2(1.0 + p * g / interference)
    return HoverSolution(
        mode="FD",
        height=height,
        hover_time=t3,
        harvest_time=t3,
        transmit_time=s,
        time_split=1.0,
        user_tx_power=p,
        hover_energy=hover_watt * t3,
        harvested_energy=harvested,
        consumed_energy=consumed,
        delivered_bits=bits,
    )


def solve_fd(
    height: float,
    channel: ChannelParams,
    radio: RadioParams,
    user: UserComm,
    hover_watt: float = 168.48,
    *,
    t_upper: float = 1e4,
    t_tol: float = 1e-9,
) -> HoverSolution:
    """Minimum hover time in FD mode: first zero crossing of :func:`fd_lhs`, by bisection.

    In terms of the transmit window ``s = t3 - delay`` the gap falls from
    ``+inf`` to a single minimum at ``s* = c ln2 / ln(eps X delay / (K c ln2))``
    and then rises, so the search brackets the crossing on ``(0, s*]``.
    """
    g = expected_channel_gain(height, channel)
    eps = user.pa_efficiency
    delay = user.circuit_delay
    c = user.demand_bits / radio.bandwidth
    k = (radio.self_interference * radio.uav_tx_power + radio.noise_power) / g
    x = radio.harvest_efficiency * radio.uav_tx_power * g - user.rx_circuit_power
    if x <= 0:
        raise InfeasibleHeightError(height, height_bound("HD", channel, radio, user), "FD")

    def gap(s: float) -> float:
        return fd_lhs(s + delay, height, channel, radio, user)

    ratio = eps * x * delay / (k * c * LN2)
    if ratio > 1.0:
        s_hi = c * LN2 / math.log(ratio)
        if s_hi + delay > t_upper:
            s_hi = t_upper - delay
        if gap(s_hi) > 0:
            raise InfeasibleError(
                f"FD: demand cannot be met at height {height:.4g} m (minimum power gap {gap(s_hi):.3g} > 0)"
            )
    else:
        if x <= user.tx_circuit_power:
            raise InfeasibleHeightError(height, height_bound("FD", channel, radio, user), "FD")
        s_hi = max(delay, c)
        while gap(s_hi) > 0:
            s_hi *= 2.0
            if s_hi + delay > t_upper:
                raise InfeasibleError(f"FD: no feasible hover time below t_upper={t_upper} s")
    s_lo = s_hi
    while gap(s_lo) <= 0:
        s_lo *= 0.5
        if s_lo < 1e-300:
            raise InfeasibleError("FD: could not bracket the hover time")
    while (s_hi - s_lo) > t_tol:
        mid = 0.5 * (s_lo + s_hi)
        if gap(mid) > 0:
            s_lo = mid
        else:
            s_hi = mid
    return _fd_solution(height, channel, radio, user, s_hi + delay, hover_watt)


def oracle_fd_scan(
    height: float,
    channel: ChannelParams,
    radio: RadioParams,
    user: UserComm,
    *,
    t_upper: float = 1e4,
    samples: int = 200_001,
    tol: float = 1e-9,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Dense sign scan of :func:`fd_lhs` for its first crossing to non-positive.

    Returns ``(t3, scan_t, scan_lhs)`` where the scan arrays come from the
    first (coarsest) pass, log-spaced in ``t3 - delay``.
    """
    delay = user.circuit_delay
    lo, hi = 1e-9, t_upper - delay
    first_t = first_v = None
    for _ in range(60):
        s = np.geomspace(lo, hi, samples) if hi / lo > 10 else np.linspace(lo, hi, samples)
        values = fd_lhs(s + delay, height, channel, radio, user)
        if first_t is None:
            first_t, first_v = s + delay, values
        idx = np.flatnonzero(values <= 0)
        if idx.size == 0:
            raise InfeasibleError("FD scan: no sign change")
        i = int(idx[0])
        if i == 0:
            hi = s[0]
            lo = s[0] * 1e-3
            continue
        lo, hi = s[i - 1], s[i]
        if hi - lo <= tol:
            break
    return hi + delay, first_t, first_v


def solve(
    mode: Mode, height: float, channel: ChannelParams, radio: RadioParams, user: UserComm, hover_watt: float
) -> HoverSolution:
    return (solve_hd if _mode(mode) == "HD" else solve_fd)(height, channel, radio, user, hover_watt)
