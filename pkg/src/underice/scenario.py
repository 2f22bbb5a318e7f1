"""Scenario configuration and command scripts.

A scenario is an INI-style document with sections [world], [ice], [gas],
[spool], [motor], [pump], [battery], [controller], [analyzer], [mission].
Every key has a default; an empty document is the shipped lake scenario.
Unknown sections or keys are rejected, and invariant violations are
reported together with the offending section.key.

Command scripts drive headless missions: one record per line,

    t=<seconds> <target> <verb> <args...>

with targets winch (slider N | estop | estop_reset | breaker_open |
breaker_close), rov (thrust SURGE SWAY HEAVE YAW), pump (power on|off),
and sim (stop). '#' starts a comment.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass

from underice.environment import (
    GasField,
    GasPlume,
    IceSheet,
    RovConfig,
    SedimentSchedule,
    WorldGeometry,
)
from underice.hydro import (
    BatterySpec,
    DomainError,
    HydroParams,
    MotorSpec,
    PumpSpec,
    SpoolGeometry,
    SystemCurve,
)
from underice.sampling import AnalyzerSpec
from underice.winch import ControllerConfig


class ConfigError(ValueError):
    """Bad scenario document; collects every problem found."""

    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("; ".join(problems))


@dataclass(frozen=True)
class ScenarioConfig:
    world: WorldGeometry
    ice: IceSheet
    gas: GasField
    sediment: SedimentSchedule
    hydro: HydroParams
    spool: SpoolGeometry
    motor: MotorSpec
    pump: PumpSpec
    system_curve: SystemCurve
    battery: BatterySpec
    controller: ControllerConfig
    analyzer: AnalyzerSpec
    rov: RovConfig
    rov_start: tuple[float, float, float]
    rov_max_speed: float
    duration: float
    dt: float
    seed: int
    telemetry_rate: float       # Hz, decimated state stream
    initial_deployed: float     # m of line already off the drum at t=0
    pump_on_at_start: bool


# defaults reproduce the shipped frozen-lake scenario
DEFAULTS: dict[str, dict[str, str]] = {
    "world": {
        "x_min_m": "-200", "x_max_m": "200",
        "y_min_m": "-200", "y_max_m": "200",
        "bottom_depth_m": "1.8",
        "hole_x_m": "0", "hole_y_m": "0",
        "water_temp_c": "2.0", "salinity_psu": "0.0",
        "water_density_kgm3": "997",
        "rov_drag_coefficient": "1.05",
        "rov_frontal_area_m2": "0.086",
        "rov_start_x_m": "0", "rov_start_y_m": "0", "rov_start_z_m": "0.5",
        "rov_max_speed_mps": "1.0",
        "rov_max_yaw_rate_rps": "0.25",
        "rov_accel_tau_s": "1.0",
        "rov_battery_wh": "100",
        "rov_hotel_w": "5",
        "rov_drive_w": "95",
    },
    "ice": {
        "shore_thickness_m": "0.05",
        "far_thickness_m": "0.125",
        "ramp_distance_m": "60",
        "draft_fraction": "0.9",
    },
    "gas": {
        "background_ch4_nm": "4.0",
        "background_co2_uatm": "400.0",
        "trend_ch4_nm_per_m": "0.0",
        "trend_co2_uatm_per_m": "0.0",
        # plumeN = cx, cy, cz, sigma_x, sigma_y, sigma_z, ch4_amp, co2_amp
        "plume1": "62.0, 49.7, 0.5, 10, 10, 1.5, 296, 850",
    },
    "spool": {
        "radius_empty_m": "0.0952",
        "radius_full_m": "0.168",
        "capacity_m": "150",
        "friction_torque_nm": "0.762",
    },
    "motor": {
        "rated_power_w": "372.85",
        "no_load_speed_rps": "188.5",
        "gear_ratio": "10",
        "drivetrain_efficiency": "0.85",
        "supply_voltage_v": "12",
        "max_current_a": "39",
    },
    "pump": {
        "nominal_flow_m3s": "1.3e-4",
        "shutoff_head_m": "60",
        "tube_inner_diameter_m": "0.00635",
        "tube_length_m": "150",
        "required_head_min_m": "3",
        "required_head_max_m": "5",
        "system_static_head_m": "0.0",
        "system_friction_coeff": "0.0",
    },
    "battery": {
        "voltage_v": "12",
        "capacity_ah": "110",
    },
    "controller": {
        "tick_rate_hz": "50",
        "ramp_step": "0.01",
        "max_duty": "0.8",
        "slider_max": "100",
    },
    "analyzer": {
        "sample_interval_s": "1.0",
        "response_tau_s": "5.0",
        "noise_ch4_nm": "2.0",
        "noise_co2_uatm": "10.0",
    },
    "mission": {
        "duration_s": "3600",
        "dt_s": "0.02",
        "seed": "1902",
        "telemetry_rate_hz": "5",
        "initial_deployed_m": "5",
        "pump_on_at_start": "true",
        # start-end pairs, comma separated, e.g. "2200-2920"
        "sediment_windows_s": "2200-2920",
    },
}


def _parse_plume(raw: str) -> GasPlume:
    parts = [float(v) for v in raw.split(",")]
    if len(parts) != 8:
        raise ValueError("expected 8 comma-separated values "
                         "(cx, cy, cz, sx, sy, sz, ch4_amp, co2_amp)")
    return GasPlume(center=(parts[0], parts[1], parts[2]),
                    sigma=(parts[3], parts[4], parts[5]),
                    ch4_amplitude=parts[6], co2_amplitude=parts[7])


def _parse_windows(raw: str) -> tuple[tuple[float, float], ...]:
    raw = raw.strip()
    if not raw or raw.lower() == "none":
        return ()
    windows = []
    for chunk in raw.split(","):
        start, _, end = chunk.partition("-")
        windows.append((float(start), float(end)))
    return tuple(windows)


def load_config(text: str) -> ScenarioConfig:
    """Parse and validate a scenario document; '' yields the defaults."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_file(io.StringIO(text))
    except configparser.Error as exc:
        raise ConfigError([f"parse error: {exc}"]) from exc

    problems: list[str] = []
    merged: dict[str, dict[str, str]] = {
        sec: dict(keys) for sec, keys in DEFAULTS.items()}
    plume_overrides: dict[str, str] = {}

    for section in parser.sections():
        if section not in DEFAULTS:
            problems.append(f"unknown section [{section}]")
            continue
        for key, value in parser.items(section):
            if section == "gas" and key.startswith("plume"):
                if key[5:].isdigit():
                    plume_overrides[key] = value
                else:
                    problems.append(f"bad plume key gas.{key}")
                continue
            if key not in DEFAULTS[section]:
                problems.append(f"unknown key {section}.{key}")
                continue
            merged[section][key] = value
    # any explicit plume replaces the default list; "plume1 = none" clears it
    plume_keys = plume_overrides or {"plume1": DEFAULTS["gas"]["plume1"]}
    plume_keys = {k: v for k, v in plume_keys.items()
                  if v.strip().lower() != "none"}
    if problems:
        raise ConfigError(problems)

    def fnum(section: str, key: str) -> float:
        try:
            return float(merged[section][key])
        except ValueError:
            problems.append(f"{section}.{key}: not a number "
                            f"({merged[section][key]!r})")
            return 1.0

    def fint(section: str, key: str) -> int:
        try:
            return int(merged[section][key])
        except ValueError:
            problems.append(f"{section}.{key}: not an integer")
            return 1

    def fbool(section: str, key: str) -> bool:
        v = merged[section][key].strip().lower()
        if v in ("true", "yes", "on", "1"):
            return True
        if v in ("false", "no", "off", "0"):
            return False
        problems.append(f"{section}.{key}: not a boolean")
        return False

    def build(section: str, ctor, **kwargs):
        try:
            return ctor(**kwargs)
        except DomainError as exc:
            problems.append(f"[{section}] {exc}")
            return None

    world = build("world", WorldGeometry,
                  x_min=fnum("world", "x_min_m"), x_max=fnum("world", "x_max_m"),
                  y_min=fnum("world", "y_min_m"), y_max=fnum("world", "y_max_m"),
                  bottom_depth=fnum("world", "bottom_depth_m"),
                  hole=(fnum("world", "hole_x_m"), fnum("world", "hole_y_m")),
                  water_temperature=fnum("world", "water_temp_c"),
                  salinity=fnum("world", "salinity_psu"))
    hole = (fnum("world", "hole_x_m"), fnum("world", "hole_y_m"))
    ice = build("ice", IceSheet,
                shore_thickness=fnum("ice", "shore_thickness_m"),
                far_thickness=fnum("ice", "far_thickness_m"),
                ramp_distance=fnum("ice", "ramp_distance_m"),
                draft_fraction=fnum("ice", "draft_fraction"),
                reference=hole)

    plumes = []
    for key in sorted(plume_keys):
        try:
            plumes.append(_parse_plume(plume_keys[key]))
        except (ValueError, DomainError) as exc:
            problems.append(f"gas.{key}: {exc}")
    gas = build("gas", GasField,
                background_ch4=fnum("gas", "background_ch4_nm"),
                background_co2=fnum("gas", "background_co2_uatm"),
                plumes=tuple(plumes),
                trend_ch4_per_m=fnum("gas", "trend_ch4_nm_per_m"),
                trend_co2_per_m=fnum("gas", "trend_co2_uatm_per_m"),
                trend_origin=hole)

    hydro = build("world", HydroParams,
                  drag_coefficient=fnum("world", "rov_drag_coefficient"),
                  frontal_area=fnum("world", "rov_frontal_area_m2"),
                  water_density=fnum("world", "water_density_kgm3"))
    spool = build("spool", SpoolGeometry,
                  radius_empty=fnum("spool", "radius_empty_m"),
                  radius_full=fnum("spool", "radius_full_m"),
                  capacity=fnum("spool", "capacity_m"),
                  friction_torque=fnum("spool", "friction_torque_nm"))
    motor = build("motor", MotorSpec,
                  rated_power=fnum("motor", "rated_power_w"),
                  no_load_speed=fnum("motor", "no_load_speed_rps"),
                  gear_ratio=fnum("motor", "gear_ratio"),
                  drivetrain_efficiency=fnum("motor", "drivetrain_efficiency"),
                  supply_voltage=fnum("motor", "supply_voltage_v"),
                  max_current=fnum("motor", "max_current_a"))
    pump = build("pump", PumpSpec,
                 nominal_flow=fnum("pump", "nominal_flow_m3s"),
                 shutoff_head=fnum("pump", "shutoff_head_m"),
                 tube_inner_diameter=fnum("pump", "tube_inner_diameter_m"),
                 tube_length=fnum("pump", "tube_length_m"),
                 required_head_min=fnum("pump", "required_head_min_m"),
                 required_head_max=fnum("pump", "required_head_max_m"))
    system_curve = SystemCurve(
        static_head=fnum("pump", "system_static_head_m"),
        friction_coeff=fnum("pump", "system_friction_coeff"))
    battery = build("battery", BatterySpec,
                    voltage=fnum("battery", "voltage_v"),
                    capacity=fnum("battery", "capacity_ah"))
    controller = build("controller", ControllerConfig,
                       tick_rate=fnum("controller", "tick_rate_hz"),
                       ramp_step=fnum("controller", "ramp_step"),
                       max_duty=fnum("controller", "max_duty"),
                       slider_max=fint("controller", "slider_max"))
    analyzer = build("analyzer", AnalyzerSpec,
                     sample_interval=fnum("analyzer", "sample_interval_s"),
                     response_tau=fnum("analyzer", "response_tau_s"),
                     noise_ch4=fnum("analyzer", "noise_ch4_nm"),
                     noise_co2=fnum("analyzer", "noise_co2_uatm"),
                     seed=fint("mission", "seed"))
    rov = build("world", RovConfig,
                accel_tau=fnum("world", "rov_accel_tau_s"),
                max_yaw_rate=fnum("world", "rov_max_yaw_rate_rps"),
                hotel_load_w=fnum("world", "rov_hotel_w"),
                drive_load_w=fnum("world", "rov_drive_w"),
                battery_capacity=fnum("world", "rov_battery_wh"))

    duration = fnum("mission", "duration_s")
    dt = fnum("mission", "dt_s")
    if duration < 0.0:
        problems.append("mission.duration_s: must be nonnegative")
    if dt <= 0.0:
        problems.append("mission.dt_s: must be positive")

    try:
        windows = _parse_windows(merged["mission"]["sediment_windows_s"])
        sediment = SedimentSchedule(intervals=windows)
        for start, end in windows:
            if start < 0.0 or end > duration:
                problems.append(
                    f"mission.sediment_windows_s: window {start}-{end} "
                    f"outside mission duration {duration}")
    except (ValueError, DomainError) as exc:
        problems.append(f"mission.sediment_windows_s: {exc}")
        sediment = SedimentSchedule()

    initial_deployed = fnum("mission", "initial_deployed_m")
    if spool is not None and not 0.0 <= initial_deployed <= spool.capacity:
        problems.append("mission.initial_deployed_m: outside [0, spool capacity]")

    if problems:
        raise ConfigError(problems)

    return ScenarioConfig(
        world=world, ice=ice, gas=gas, sediment=sediment, hydro=hydro,
        spool=spool, motor=motor, pump=pump, system_curve=system_curve,
        battery=battery, controller=controller, analyzer=analyzer, rov=rov,
        rov_start=(fnum("world", "rov_start_x_m"),
                   fnum("world", "rov_start_y_m"),
                   fnum("world", "rov_start_z_m")),
        rov_max_speed=fnum("world", "rov_max_speed_mps"),
        duration=duration, dt=dt, seed=fint("mission", "seed"),
        telemetry_rate=fnum("mission", "telemetry_rate_hz"),
        initial_deployed=initial_deployed,
        pump_on_at_start=fbool("mission", "pump_on_at_start"),
    )


# --- command scripts ---------------------------------------------------------

class ScriptError(ValueError):
    pass


Command = tuple  # ("winch_slider", n) | ("rov_thrust", (s,w,h,y)) | ("estop",)
#                | ("estop_reset",) | ("pump_power", bool) | ("breaker", bool)
#                | ("sim_stop",)


def parse_script(text: str) -> list[tuple[float, Command]]:
    """Parse a command script into time-sorted (t, command) records."""
    out: list[tuple[float, Command]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if not parts[0].startswith("t="):
                raise ScriptError("record must start with t=<seconds>")
            t = float(parts[0][2:])
            target = parts[1]
            verb = parts[2] if len(parts) > 2 else ""
            args = parts[3:]
            if target == "winch":
                if verb == "slider":
                    out.append((t, ("winch_slider", int(args[0]))))
                elif verb == "estop":
                    out.append((t, ("estop",)))
                elif verb == "estop_reset":
                    out.append((t, ("estop_reset",)))
                elif verb == "breaker_open":
                    out.append((t, ("breaker", True)))
                elif verb == "breaker_close":
                    out.append((t, ("breaker", False)))
                else:
                    raise ScriptError(f"unknown winch verb {verb!r}")
            elif target == "rov":
                if verb != "thrust" or len(args) != 4:
                    raise ScriptError("rov takes: thrust SURGE SWAY HEAVE YAW")
                out.append((t, ("rov_thrust", tuple(float(a) for a in args))))
            elif target == "pump":
                if verb != "power" or args[0] not in ("on", "off"):
                    raise ScriptError("pump takes: power on|off")
                out.append((t, ("pump_power", args[0] == "on")))
            elif target == "sim":
                if verb != "stop":
                    raise ScriptError(f"unknown sim verb {verb!r}")
                out.append((t, ("sim_stop",)))
            else:
                raise ScriptError(f"unknown target {target!r}")
        except (ScriptError, ValueError, IndexError) as exc:
            raise ScriptError(f"line {lineno}: {raw.strip()!r}: {exc}") from exc
    out.sort(key=lambda rec: rec[0])
    return out
