"""Winch controller state machine and quasi-static drum dynamics.

The controller mirrors the deployed hardware's behavior: a signed integer
slider maps to a duty target, the drive ramps toward that target a fixed
step per tick, a hard-coded duty cap can never be exceeded, the e-stop
ramps the drive to zero with top precedence, and the breaker cuts power
instantly. Drum motion is quasi-static (no rotor inertia at a 20 ms tick).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import sqrt

from underice.hydro import (
    DomainError,
    MotorSpec,
    SpoolGeometry,
    drum_speed_under_load,
    effective_radius,
)


@dataclass(frozen=True)
class ControllerConfig:
    tick_rate: float = 50.0   # Hz
    ramp_step: float = 0.01   # duty fraction per tick
    max_duty: float = 0.8     # hard cap, both directions
    slider_max: int = 100     # slider range is [-slider_max, +slider_max]

    def __post_init__(self) -> None:
        if self.tick_rate <= 0:
            raise DomainError("tick_rate must be positive")
        if not 0.0 < self.ramp_step <= 1.0:
            raise DomainError("ramp_step must be in (0, 1]")
        if not 0.0 < self.max_duty <= 1.0:
            raise DomainError("max_duty must be in (0, 1]")
        if self.slider_max <= 0:
            raise DomainError("slider_max must be positive")


@dataclass
class WinchState:
    """Controller and drum state. Positive duty reels line in."""

    target_duty: float = 0.0
    current_duty: float = 0.0
    drum_speed: float = 0.0     # rad/s, signed like duty
    wound_length: float = 0.0   # m of line on the drum
    estopped: bool = False
    breaker_open: bool = False


@dataclass
class TetherState:
    deployed_length: float = 0.0        # m off the drum
    straight_line_distance: float = 0.0  # m, hole to vehicle
    slack: float = 0.0                  # m
    taut: bool = False


def apply_command(state: WinchState, cfg: ControllerConfig, slider: int,
                  events: list | None = None) -> WinchState:
    """Map a slider position to a duty target.

    Out-of-range sliders are clamped and flagged rather than rejected;
    the whole command is ignored while e-stopped or with the breaker open.
    """
    if state.estopped or state.breaker_open:
        return state
    if abs(slider) > cfg.slider_max and events is not None:
        events.append(("clamp", f"slider {slider} clamped to +/-{cfg.slider_max}"))
    raw = slider / cfg.slider_max
    state.target_duty = max(-cfg.max_duty, min(cfg.max_duty, raw))
    return state


def engage_estop(state: WinchState) -> WinchState:
    """Latch the e-stop: target forced to zero, drive ramps down."""
    state.estopped = True
    state.target_duty = 0.0
    return state


def reset_estop(state: WinchState) -> WinchState:
    state.estopped = False
    return state


def trip_breaker(state: WinchState) -> WinchState:
    """Open the breaker: power cut instantly, no ramp."""
    state.breaker_open = True
    state.target_duty = 0.0
    state.current_duty = 0.0
    state.drum_speed = 0.0
    return state


def close_breaker(state: WinchState) -> WinchState:
    state.breaker_open = False
    return state


def tick_controller(state: WinchState, cfg: ControllerConfig,
                    dt: float) -> WinchState:
    """Advance the duty ramp one tick (dt = 1/tick_rate)."""
    if state.breaker_open:
        state.current_duty = 0.0
        return state
    target = 0.0 if state.estopped else state.target_duty
    target = max(-cfg.max_duty, min(cfg.max_duty, target))
    delta = target - state.current_duty
    if abs(delta) <= cfg.ramp_step:
        state.current_duty = target
    else:
        state.current_duty += cfg.ramp_step if delta > 0 else -cfg.ramp_step
    # belt and braces: the cap must hold regardless of history
    state.current_duty = max(-cfg.max_duty, min(cfg.max_duty, state.current_duty))
    return state


def step_dynamics(state: WinchState, spool: SpoolGeometry, motor: MotorSpec,
                  load_torque: float, dt: float,
                  events: list | None = None) -> WinchState:
    """Integrate drum rotation into wound length for one tick.

    Wound length is hard-clamped to [0, capacity]; hitting either end
    zeroes the drum and logs a limit event (once per entry into the limit).
    """
    duty = state.current_duty
    speed = drum_speed_under_load(motor, abs(duty), load_torque)
    state.drum_speed = speed if duty >= 0 else -speed
    if state.drum_speed == 0.0:
        return state

    radius = effective_radius(spool, state.wound_length)
    new_wound = state.wound_length + state.drum_speed * radius * dt
    if new_wound >= spool.capacity:
        at_limit_before = state.wound_length >= spool.capacity
        state.wound_length = spool.capacity
        state.drum_speed = 0.0
        if events is not None and not at_limit_before:
            events.append(("limit", "drum full: wound length at capacity"))
    elif new_wound <= 0.0:
        at_limit_before = state.wound_length <= 0.0
        state.wound_length = 0.0
        state.drum_speed = 0.0
        if events is not None and not at_limit_before:
            events.append(("limit", "drum empty: all line paid out"))
    else:
        state.wound_length = new_wound
    return state


def update_tether(tether: TetherState, spool: SpoolGeometry,
                  wound_length: float,
                  rov_position: tuple[float, float, float],
                  hole_position: tuple[float, float, float],
                  events: list | None = None) -> TetherState:
    """Recompute deployed length, slack, and tautness.

    Emits a tension event on the slack -> taut transition; the vehicle
    model consumes tautness to constrain motion.
    """
    dx = rov_position[0] - hole_position[0]
    dy = rov_position[1] - hole_position[1]
    dz = rov_position[2] - hole_position[2]
    distance = sqrt(dx * dx + dy * dy + dz * dz)

    was_taut = tether.taut
    tether.deployed_length = spool.capacity - wound_length
    tether.straight_line_distance = distance
    tether.slack = tether.deployed_length - distance
    tether.taut = tether.slack <= 0.0
    if tether.taut and not was_taut and events is not None:
        events.append(("tension", f"tether taut, deployed {tether.deployed_length:.1f} m"))
    return tether
