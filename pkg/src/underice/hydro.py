"""Winch, pump, and tubing sizing math.

Pure functions over immutable parameter records. Everything is SI:
meters, newtons, watts, rad/s, m^3/s. The reeling load model is

    F_D  = 1/2 * C_D * A * rho * V^2          (drag on the towed vehicle)
    tau  = tau_f + R * F_D                    (torque at the drum)
    Om   = V / r                              (drum speed for line speed V)
    P    = 4 * Om * tau                       (rated-power requirement)

plus a linear variable-radius spool, an affine PMDC torque-speed curve,
a linear pump curve intersected with a monotone system curve, plug-flow
tube residence time, and amp-hour battery accounting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

GRAVITY = 9.81  # m/s^2


class DomainError(ValueError):
    """Input outside the physical domain of a model."""


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise DomainError(msg)


@dataclass(frozen=True)
class HydroParams:
    """Drag model constants for the towed vehicle."""

    drag_coefficient: float = 1.05  # dimensionless
    frontal_area: float = 0.086     # m^2
    water_density: float = 997.0    # kg/m^3

    def __post_init__(self) -> None:
        _require(0.0 < self.drag_coefficient <= 3.0,
                 "drag_coefficient must be in (0, 3]")
        _require(self.frontal_area > 0.0, "frontal_area must be positive")
        _require(self.water_density > 0.0, "water_density must be positive")


@dataclass(frozen=True)
class SpoolGeometry:
    """Drum geometry and bearing friction."""

    radius_empty: float = 0.0952    # m, bare drum
    radius_full: float = 0.168      # m, fully wound
    capacity: float = 150.0         # m of coupled tether + tube
    friction_torque: float = 0.762  # N*m

    def __post_init__(self) -> None:
        _require(0.0 < self.radius_empty < self.radius_full,
                 "need 0 < radius_empty < radius_full")
        _require(self.capacity > 0.0, "capacity must be positive")
        _require(self.friction_torque >= 0.0,
                 "friction_torque must be nonnegative")


@dataclass(frozen=True)
class MotorSpec:
    """Permanent-magnet DC winch motor behind a reduction gearbox."""

    rated_power: float = 372.85          # W
    no_load_speed: float = 188.5         # rad/s at the motor shaft
    gear_ratio: float = 10.0
    drivetrain_efficiency: float = 0.85  # fraction through gearbox + belt
    supply_voltage: float = 12.0         # V
    max_current: float = 39.0            # A

    def __post_init__(self) -> None:
        _require(self.rated_power > 0.0, "rated_power must be positive")
        _require(self.no_load_speed > 0.0, "no_load_speed must be positive")
        _require(self.gear_ratio > 0.0, "gear_ratio must be positive")
        _require(0.0 < self.drivetrain_efficiency <= 1.0,
                 "drivetrain_efficiency must be in (0, 1]")
        _require(self.max_current > 0.0, "max_current must be positive")

    @property
    def stall_torque_drum(self) -> float:
        """Full-duty stall torque referred to the drum shaft, N*m."""
        return (4.0 * self.rated_power / self.no_load_speed
                * self.gear_ratio * self.drivetrain_efficiency)

    @property
    def no_load_speed_drum(self) -> float:
        """Full-duty no-load speed of the drum shaft, rad/s."""
        return self.no_load_speed / self.gear_ratio


@dataclass(frozen=True)
class PumpSpec:
    """Diaphragm sample pump and the tubing it feeds."""

    nominal_flow: float = 1.3e-4        # m^3/s (2 gal/min class)
    shutoff_head: float = 60.0          # m, zero-flow head
    tube_inner_diameter: float = 0.00635  # m
    tube_length: float = 150.0          # m
    required_head_min: float = 3.0      # m
    required_head_max: float = 5.0      # m

    def __post_init__(self) -> None:
        _require(self.nominal_flow > 0.0, "nominal_flow must be positive")
        _require(self.tube_inner_diameter > 0.0 and self.tube_length > 0.0,
                 "tube dimensions must be positive")
        _require(self.required_head_min <= self.required_head_max,
                 "required head range inverted")
        _require(self.shutoff_head > self.required_head_max,
                 "shutoff_head must exceed required_head_max")

    @property
    def tube_cross_section(self) -> float:
        """Tube bore area, m^2."""
        return math.pi * self.tube_inner_diameter ** 2 / 4.0

    @property
    def tube_volume(self) -> float:
        """Total water volume held by the tubing, m^3."""
        return self.tube_cross_section * self.tube_length


@dataclass(frozen=True)
class BatterySpec:
    """Topside SLA battery powering the winch."""

    voltage: float = 12.0    # V
    capacity: float = 110.0  # A*h

    def __post_init__(self) -> None:
        _require(self.voltage > 0.0 and self.capacity > 0.0,
                 "battery voltage and capacity must be positive")


# --- sizing chain ----------------------------------------------------------

def drag_force(params: HydroParams, speed: float) -> float:
    """Quadratic drag on the vehicle at relative water speed `speed`, N."""
    _require(speed >= 0.0, "speed must be nonnegative")
    return 0.5 * params.drag_coefficient * params.frontal_area \
        * params.water_density * speed * speed


def operating_torque(spool: SpoolGeometry, drag: float, radius: float) -> float:
    """Drum torque to hold `drag` at the given working radius, N*m."""
    _require(drag >= 0.0, "drag must be nonnegative")
    _require(spool.radius_empty <= radius <= spool.radius_full,
             f"radius {radius} outside spool bounds "
             f"[{spool.radius_empty}, {spool.radius_full}]")
    return spool.friction_torque + radius * drag


def required_speed(line_speed: float, radius: float) -> float:
    """Drum angular speed for a linear line speed, rad/s."""
    _require(radius > 0.0, "radius must be positive")
    _require(line_speed >= 0.0, "line_speed must be nonnegative")
    return line_speed / radius


def rated_power_requirement(omega: float, torque: float) -> float:
    """Rated-power figure 4*omega*torque, W.

    Caller compares the result against MotorSpec.rated_power.
    """
    _require(omega >= 0.0 and torque >= 0.0,
             "omega and torque must be nonnegative")
    return 4.0 * omega * torque


# --- spool and motor models ------------------------------------------------

def effective_radius(spool: SpoolGeometry, wound_length: float) -> float:
    """Working radius of the drum with `wound_length` m of line on it.

    Linear between the bare-drum and full-drum radii.
    """
    _require(0.0 <= wound_length <= spool.capacity,
             f"wound_length {wound_length} outside [0, {spool.capacity}]")
    frac = wound_length / spool.capacity
    return spool.radius_empty + (spool.radius_full - spool.radius_empty) * frac


def drum_speed_under_load(motor: MotorSpec, duty: float,
                          load_torque: float) -> float:
    """Quasi-static drum speed at a duty fraction against a load, rad/s.

    Affine PMDC curve: duty scales both the stall torque and the no-load
    speed; speed falls linearly to zero at stall and is floored there.
    """
    _require(0.0 <= duty <= 1.0, "duty must be in [0, 1]")
    _require(load_torque >= 0.0, "load_torque must be nonnegative")
    if duty == 0.0:
        return 0.0
    stall = duty * motor.stall_torque_drum
    if load_torque >= stall:
        return 0.0
    no_load = duty * motor.no_load_speed_drum
    return no_load * (1.0 - load_torque / stall)


# --- pump and tubing -------------------------------------------------------

@dataclass(frozen=True)
class SystemCurve:
    """Static head plus quadratic friction loss, h(Q) = h0 + k*Q^2."""

    static_head: float = 0.0  # m
    friction_coeff: float = 0.0  # m per (m^3/s)^2

    def __call__(self, flow: float) -> float:
        return self.static_head + self.friction_coeff * flow * flow


@dataclass(frozen=True)
class OperatingPoint:
    flow: float       # m^3/s
    head: float       # m
    no_flow: bool = False


_HEAD_TOL = 1e-9  # m, intersection solver tolerance


def pump_head(pump: PumpSpec, flow: float) -> float:
    """Linear pump curve from (0, shutoff_head) to (nominal_flow, 0), m."""
    return pump.shutoff_head * (1.0 - flow / pump.nominal_flow)


def pump_operating_point(pump: PumpSpec,
                         system_head: Callable[[float], float]) -> OperatingPoint:
    """Intersect the pump curve with a monotone-increasing system curve.

    Deadheaded systems (static head at or above shutoff) come back flagged
    with zero flow rather than raising.
    """
    static = system_head(0.0)
    if static >= pump.shutoff_head:
        return OperatingPoint(flow=0.0, head=static, no_flow=True)

    lo, hi = 0.0, pump.nominal_flow
    # pump - system is positive at lo, <= 0 at hi; bisect to _HEAD_TOL.
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gap = pump_head(pump, mid) - system_head(mid)
        if abs(gap) <= _HEAD_TOL:
            lo = hi = mid
            break
        if gap > 0.0:
            lo = mid
        else:
            hi = mid
    flow = 0.5 * (lo + hi)
    return OperatingPoint(flow=flow, head=pump_head(pump, flow))


def tube_transit_time(pump: PumpSpec, flow: float) -> float:
    """Plug-flow residence time of the full tubing at `flow`, s."""
    _require(flow > 0.0, "flow must be positive")
    return pump.tube_volume / flow


# --- battery ---------------------------------------------------------------

def battery_endurance(battery: BatterySpec,
                      draw_profile: Sequence[tuple[float, float]]) -> float:
    """Seconds until the battery is exhausted by a (duration_s, amps) profile.

    Returns the total profile duration if capacity is never exhausted.
    """
    remaining_as = battery.capacity * 3600.0  # amp-seconds
    elapsed = 0.0
    for duration, current in draw_profile:
        _require(current >= 0.0, "currents must be nonnegative")
        _require(duration >= 0.0, "durations must be nonnegative")
        used = current * duration
        if current > 0.0 and used >= remaining_as:
            return elapsed + remaining_as / current
        remaining_as -= used
        elapsed += duration
    return elapsed
