"""The world under the ice: gas field, ice sheet, vehicle, and sediment.

Coordinates are meters, x/y east-north from the deployment hole, z depth
positive down. Gas concentrations are carried as CH4 in nM and CO2 in
uatm throughout. The gas field is background plus Gaussian patches plus
an optional radial offshore trend; all deterministic in position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from underice.hydro import DomainError, _require


@dataclass(frozen=True)
class GasPlume:
    """One Gaussian patch of elevated dissolved gas."""

    center: tuple[float, float, float]   # m
    sigma: tuple[float, float, float]    # m per axis
    ch4_amplitude: float                 # nM above background at center
    co2_amplitude: float                 # uatm above background at center

    def __post_init__(self) -> None:
        _require(all(s > 0.0 for s in self.sigma), "plume sigma must be positive")
        _require(self.ch4_amplitude >= 0.0 and self.co2_amplitude >= 0.0,
                 "plume amplitudes must be nonnegative")

    def intensity(self, x: float, y: float, z: float) -> float:
        dx = (x - self.center[0]) / self.sigma[0]
        dy = (y - self.center[1]) / self.sigma[1]
        dz = (z - self.center[2]) / self.sigma[2]
        return math.exp(-0.5 * (dx * dx + dy * dy + dz * dz))


@dataclass(frozen=True)
class GasField:
    background_ch4: float = 4.0     # nM
    background_co2: float = 400.0   # uatm
    plumes: tuple[GasPlume, ...] = ()
    # offshore trend: added per meter of horizontal distance from the
    # reference point (the deployment hole); nonnegative so the field
    # never drops below background
    trend_ch4_per_m: float = 0.0
    trend_co2_per_m: float = 0.0
    trend_origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        _require(self.background_ch4 >= 0.0 and self.background_co2 >= 0.0,
                 "background concentrations must be nonnegative")
        _require(self.trend_ch4_per_m >= 0.0 and self.trend_co2_per_m >= 0.0,
                 "trend coefficients must be nonnegative")


def gas_at(field: GasField, position: tuple[float, float, float],
           time: float = 0.0) -> tuple[float, float]:
    """Dissolved (CH4 nM, CO2 uatm) at a point. Static in time for now."""
    x, y, z = position
    ch4 = field.background_ch4
    co2 = field.background_co2
    for plume in field.plumes:
        g = plume.intensity(x, y, z)
        ch4 += plume.ch4_amplitude * g
        co2 += plume.co2_amplitude * g
    if field.trend_ch4_per_m or field.trend_co2_per_m:
        r = math.hypot(x - field.trend_origin[0], y - field.trend_origin[1])
        ch4 += field.trend_ch4_per_m * r
        co2 += field.trend_co2_per_m * r
    return ch4, co2


@dataclass(frozen=True)
class IceSheet:
    """Ice cover thinning toward the deployment hole at the shore."""

    shore_thickness: float = 0.05   # m at the hole
    far_thickness: float = 0.125    # m beyond the ramp
    ramp_distance: float = 60.0     # m over which thickness grows
    draft_fraction: float = 0.9     # submerged fraction of thickness
    reference: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        _require(0.0 < self.shore_thickness <= self.far_thickness,
                 "need 0 < shore_thickness <= far_thickness")
        _require(0.0 <= self.draft_fraction <= 1.0,
                 "draft_fraction must be in [0, 1]")
        _require(self.ramp_distance > 0.0, "ramp_distance must be positive")

    def thickness_at(self, x: float, y: float) -> float:
        r = math.hypot(x - self.reference[0], y - self.reference[1])
        frac = min(1.0, r / self.ramp_distance)
        return self.shore_thickness + (self.far_thickness - self.shore_thickness) * frac

    def draft_at(self, x: float, y: float) -> float:
        return self.draft_fraction * self.thickness_at(x, y)


@dataclass(frozen=True)
class WorldGeometry:
    """Horizontal extent, bottom depth, and the through-ice hole."""

    x_min: float = -200.0
    x_max: float = 200.0
    y_min: float = -200.0
    y_max: float = 200.0
    bottom_depth: float = 1.8       # m
    hole: tuple[float, float] = (0.0, 0.0)
    water_temperature: float = 2.0  # degC, recorded metadata
    salinity: float = 0.0           # PSU, recorded metadata

    def __post_init__(self) -> None:
        _require(self.x_min < self.x_max and self.y_min < self.y_max,
                 "world bounds inverted")
        _require(self.bottom_depth > 0.0, "bottom_depth must be positive")


@dataclass(frozen=True)
class RovConfig:
    """Vehicle response and power model."""

    accel_tau: float = 1.0        # s, first-order velocity response
    max_yaw_rate: float = 0.25    # rad/s at full yaw command
    hotel_load_w: float = 5.0     # electronics + lights
    drive_load_w: float = 95.0    # thruster draw at full throttle
    battery_capacity: float = 100.0  # Wh; full-throttle endurance ~1 h

    def __post_init__(self) -> None:
        _require(self.accel_tau > 0.0, "accel_tau must be positive")
        _require(self.hotel_load_w >= 0.0 and self.drive_load_w >= 0.0,
                 "loads must be nonnegative")
        _require(self.battery_capacity > 0.0, "battery_capacity must be positive")


@dataclass
class RovState:
    x: float = 0.0
    y: float = 0.0
    z: float = 0.5                 # m, depth positive down
    vx: float = 0.0
    vy: float = 0.0
    vz: float = 0.0
    heading: float = 0.0           # rad, 0 = +x
    battery_remaining: float = 100.0  # Wh
    max_speed: float = 1.0         # m/s per axis at full command

    @property
    def position(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    @property
    def depleted(self) -> bool:
        return self.battery_remaining <= 0.0


@dataclass(frozen=True)
class SedimentSchedule:
    """Windows during which the inlet is sucking sediment."""

    intervals: tuple[tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        prev_end = -math.inf
        for start, end in self.intervals:
            _require(start < end, f"empty sediment interval ({start}, {end})")
            _require(start >= prev_end, "sediment intervals must be disjoint")
            prev_end = end


def is_contaminated(schedule: SedimentSchedule, t: float) -> bool:
    """True iff t falls in a sediment window (closed start, open end)."""
    _require(t >= 0.0, "t must be nonnegative")
    for start, end in schedule.intervals:
        if start <= t < end:
            return True
    return False


def step_rov(rov: RovState, cfg: RovConfig,
             command: tuple[float, float, float, float],
             world: WorldGeometry, ice: IceSheet, tether,
             dt: float, events: list | None = None) -> RovState:
    """Advance the teleoperated vehicle one step.

    `command` is normalized (surge, sway, heave, yaw), each clamped to
    [-1, 1]. Velocity responds first-order toward command * max_speed;
    position is clamped to the ice draft, the bottom, the shore bounds,
    and the tether reach when taut. A dead battery stops the thrusters.
    """
    surge = max(-1.0, min(1.0, command[0]))
    sway = max(-1.0, min(1.0, command[1]))
    heave = max(-1.0, min(1.0, command[2]))
    yaw = max(-1.0, min(1.0, command[3]))

    if rov.depleted:
        surge = sway = heave = yaw = 0.0

    rov.heading += yaw * cfg.max_yaw_rate * dt

    cos_h = math.cos(rov.heading)
    sin_h = math.sin(rov.heading)
    vcx = (surge * cos_h - sway * sin_h) * rov.max_speed
    vcy = (surge * sin_h + sway * cos_h) * rov.max_speed
    vcz = heave * rov.max_speed

    alpha = 1.0 - math.exp(-dt / cfg.accel_tau)
    rov.vx += (vcx - rov.vx) * alpha
    rov.vy += (vcy - rov.vy) * alpha
    rov.vz += (vcz - rov.vz) * alpha

    # tether constraint: when taut, kill outward radial motion
    if tether is not None and tether.taut:
        rx = rov.x - world.hole[0]
        ry = rov.y - world.hole[1]
        rz = rov.z
        norm = math.sqrt(rx * rx + ry * ry + rz * rz)
        if norm > 0.0:
            radial = (rov.vx * rx + rov.vy * ry + rov.vz * rz) / norm
            if radial > 0.0:
                rov.vx -= radial * rx / norm
                rov.vy -= radial * ry / norm
                rov.vz -= radial * rz / norm

    rov.x += rov.vx * dt
    rov.y += rov.vy * dt
    rov.z += rov.vz * dt

    # shore bounds
    if rov.x < world.x_min:
        rov.x, rov.vx = world.x_min, 0.0
    elif rov.x > world.x_max:
        rov.x, rov.vx = world.x_max, 0.0
    if rov.y < world.y_min:
        rov.y, rov.vy = world.y_min, 0.0
    elif rov.y > world.y_max:
        rov.y, rov.vy = world.y_max, 0.0

    # ice ceiling and lake bottom
    draft = ice.draft_at(rov.x, rov.y)
    if rov.z < draft:
        rov.z, rov.vz = draft, 0.0
    elif rov.z > world.bottom_depth:
        rov.z, rov.vz = world.bottom_depth, 0.0

    # hard tether reach: never drift beyond deployed line
    if tether is not None and tether.taut:
        rx = rov.x - world.hole[0]
        ry = rov.y - world.hole[1]
        rz = rov.z
        dist = math.sqrt(rx * rx + ry * ry + rz * rz)
        reach = tether.deployed_length
        if reach > 0.0 and dist > reach:
            scale = reach / dist
            rov.x = world.hole[0] + rx * scale
            rov.y = world.hole[1] + ry * scale
            rov.z = max(draft, rz * scale)

    # battery: hotel load plus thrust-proportional drive load
    thrust = math.sqrt(surge * surge + sway * sway + heave * heave + yaw * yaw)
    load_w = cfg.hotel_load_w + cfg.drive_load_w * min(1.0, thrust)
    low_mark = 0.1 * cfg.battery_capacity
    was_low = rov.battery_remaining <= low_mark
    rov.battery_remaining = max(0.0, rov.battery_remaining - load_w * dt / 3600.0)
    if events is not None and not was_low and rov.battery_remaining <= low_mark:
        events.append(("battery_low", f"rov battery at {rov.battery_remaining:.1f} Wh"))
    return rov
