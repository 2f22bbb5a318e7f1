"""Deterministic fixed-step mission orchestration.

One Simulation owns the whole world state and is advanced only by its
stepper: commands are applied from an ordered queue, the winch controller
ticks, drum dynamics integrate, the vehicle moves, the tether is
re-accounted, a parcel of water enters the line and the line advances,
and the analyzer reports on its own cadence. Identical (config, script,
seed) triples produce identical outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from underice import winch as winchmod
from underice.environment import RovState, gas_at, is_contaminated, step_rov
from underice.hydro import (
    drag_force,
    effective_radius,
    operating_torque,
    pump_operating_point,
)
from underice.sampling import Analyzer, Measurement, TubeState, advect, analyze, intake
from underice.scenario import Command, ScenarioConfig
from underice.winch import TetherState, WinchState


@dataclass
class EventLog:
    """Ordered (time, kind, detail) mission events."""

    records: list[tuple[float, str, str]] = field(default_factory=list)

    def append(self, time: float, kind: str, detail: str) -> None:
        if self.records and time < self.records[-1][0]:
            raise ValueError("event times must be nondecreasing")
        self.records.append((time, kind, detail))

    def kinds(self) -> set[str]:
        return {kind for _, kind, _ in self.records}

    def __len__(self) -> int:
        return len(self.records)


class Simulation:
    """World state plus the stepper that is its single owner."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.time = 0.0
        self.step_index = 0
        self.events = EventLog()
        self.measurements: list[Measurement] = []
        self.track: list[tuple[float, float, float, float]] = []
        self.stopped = False

        self.rov = RovState(
            x=config.rov_start[0], y=config.rov_start[1], z=config.rov_start[2],
            battery_remaining=config.rov.battery_capacity,
            max_speed=config.rov_max_speed)
        self.rov_command = (0.0, 0.0, 0.0, 0.0)

        self.winch = WinchState(
            wound_length=config.spool.capacity - config.initial_deployed)
        self.tether = TetherState()
        self._hole3 = (config.world.hole[0], config.world.hole[1], 0.0)
        winchmod.update_tether(self.tether, config.spool,
                               self.winch.wound_length,
                               self.rov.position, self._hole3)

        op = pump_operating_point(config.pump, config.system_curve)
        self._pump_flow = 0.0 if op.no_flow else op.flow
        self.pump_on = config.pump_on_at_start and not op.no_flow
        if op.no_flow:
            self.events.append(0.0, "limit", "pump deadheaded: no flow")

        self.tube = TubeState(config.pump,
                              flow=self._pump_flow if self.pump_on else 0.0)
        if self.pump_on:
            # line primed during setup pumping at the start position
            ch4, co2 = gas_at(config.gas, self.rov.position, 0.0)
            self.tube.prime(self.rov.position, ch4, co2,
                            self._pump_flow, config.dt)
        self.analyzer = Analyzer(config.analyzer)

        # track starts at t=0 so lag correction can cover early samples
        self._track_every = max(1, round(1.0 / (config.telemetry_rate * config.dt)))
        self.track.append((0.0, self.rov.x, self.rov.y, self.rov.z))

        self._events_buf: list[tuple[str, str]] = []
        self._was_contaminated = False

    @property
    def pump_flow(self) -> float:
        return self.tube.flow

    def apply(self, command: Command) -> None:
        """Apply one operator/script command to the world."""
        kind = command[0]
        if kind == "winch_slider":
            winchmod.apply_command(self.winch, self.config.controller,
                                   command[1], self._events_buf)
        elif kind == "rov_thrust":
            self.rov_command = command[1]
        elif kind == "estop":
            winchmod.engage_estop(self.winch)
            self._events_buf.append(("estop", "emergency stop engaged"))
        elif kind == "estop_reset":
            winchmod.reset_estop(self.winch)
            self._events_buf.append(("estop", "emergency stop reset"))
        elif kind == "pump_power":
            self.pump_on = bool(command[1]) and self._pump_flow > 0.0
            self.tube.flow = self._pump_flow if self.pump_on else 0.0
        elif kind == "breaker":
            if command[1]:
                winchmod.trip_breaker(self.winch)
            else:
                winchmod.close_breaker(self.winch)
        elif kind == "sim_stop":
            self.stopped = True
        else:
            raise ValueError(f"unknown command kind {kind!r}")

    def step(self, commands: list[Command] = ()) -> None:
        """Advance exactly one dt."""
        cfg = self.config
        dt = cfg.dt
        for command in commands:
            self.apply(command)

        winchmod.tick_controller(self.winch, cfg.controller, dt)

        # reeling load: tether drag when taut (previous tick's line speed),
        # bearing friction alone when slack
        radius = effective_radius(cfg.spool, self.winch.wound_length)
        if self.tether.taut:
            line_speed = abs(self.winch.drum_speed) * radius
            load = operating_torque(cfg.spool,
                                    drag_force(cfg.hydro, line_speed), radius)
        else:
            load = cfg.spool.friction_torque
        winchmod.step_dynamics(self.winch, cfg.spool, cfg.motor, load, dt,
                               self._events_buf)

        step_rov(self.rov, cfg.rov, self.rov_command, cfg.world, cfg.ice,
                 self.tether, dt, self._events_buf)

        winchmod.update_tether(self.tether, cfg.spool, self.winch.wound_length,
                               self.rov.position, self._hole3, self._events_buf)

        self.step_index += 1
        self.time = self.step_index * dt

        contaminated = False
        if self.tube.flow > 0.0:
            contaminated = is_contaminated(cfg.sediment, self.time)
            if contaminated and not self._was_contaminated:
                self._events_buf.append(
                    ("contamination", "sediment in the sampling line"))
            self._was_contaminated = contaminated
            conc = gas_at(cfg.gas, self.rov.position, self.time)
            intake(self.tube, self.rov.position, conc, self.time, dt,
                   contaminated)
        emitted = advect(self.tube, dt)
        self.measurements.extend(analyze(self.analyzer, emitted, self.time))

        if self.step_index % self._track_every == 0:
            self.track.append((self.time, self.rov.x, self.rov.y, self.rov.z))

        for kind, detail in self._events_buf:
            self.events.append(self.time, kind, detail)
        self._events_buf.clear()

    def snapshot(self) -> dict:
        """Immutable view of the live state for telemetry."""
        return {
            "t": round(self.time, 6),
            "rov": {
                "x": self.rov.x, "y": self.rov.y, "z": self.rov.z,
                "vx": self.rov.vx, "vy": self.rov.vy, "vz": self.rov.vz,
                "heading": self.rov.heading,
                "battery_wh": self.rov.battery_remaining,
            },
            "winch": {
                "duty": self.winch.current_duty,
                "target_duty": self.winch.target_duty,
                "wound_m": self.winch.wound_length,
                "estopped": self.winch.estopped,
                "breaker_open": self.winch.breaker_open,
            },
            "tether": {
                "deployed_m": self.tether.deployed_length,
                "slack_m": self.tether.slack,
                "taut": self.tether.taut,
            },
            "pump": {"flow_m3s": self.tube.flow, "on": self.pump_on},
        }

    def finished(self) -> bool:
        return (self.stopped
                or self.time >= self.config.duration - 1e-9
                or self.rov.depleted)


def step(sim: Simulation, commands: list[Command] = ()) -> Simulation:
    """Advance a simulation one dt with the given drained commands."""
    sim.step(commands)
    return sim


def run(config: ScenarioConfig,
        script: list[tuple[float, Command]] | None = None):
    """Execute a headless mission to its end.

    Returns (measurements, events, track). The mission ends at the
    configured duration, at vehicle battery depletion, or at a scripted
    sim stop, whichever comes first.
    """
    sim = Simulation(config)
    pending = sorted(script, key=lambda rec: rec[0]) if script else []
    cursor = 0
    while not sim.finished():
        due: list[Command] = []
        while cursor < len(pending) and pending[cursor][0] <= sim.time + 1e-9:
            due.append(pending[cursor][1])
            cursor += 1
        sim.step(due)
    return sim.measurements, sim.events, sim.track
