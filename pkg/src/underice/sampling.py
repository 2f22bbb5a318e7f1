"""Water transport from the vehicle inlet to the topside analyzer.

Plug flow: parcels of water enter the tube at the inlet, travel without
mixing or overtaking, and emerge a full tube volume later. Transport is
bookkept as cumulative travel distance, so a step costs O(1) regardless
of how much water is in the line. The analyzer smooths the emerging
stream with a first-order response, adds seeded Gaussian noise, and
reports at a fixed cadence; samples drawn from contaminated water are
reported invalid with their values withheld.
"""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from underice.hydro import DomainError, PumpSpec, _require


@dataclass(slots=True)
class Parcel:
    intake_time: float
    intake_position: tuple[float, float, float]
    ch4: float   # nM
    co2: float   # uatm
    contaminated: bool = False


class TubeState:
    """FIFO of parcels in the tubing plus the cumulative travel odometer."""

    def __init__(self, pump: PumpSpec, flow: float = 0.0):
        self.pump = pump
        self.flow = flow  # m^3/s, current pump delivery
        self._fifo: deque[tuple[float, Parcel]] = deque()  # (odometer stamp, parcel)
        self._travel = 0.0  # m of water column advanced since start

    def __len__(self) -> int:
        return len(self._fifo)

    @property
    def linear_speed(self) -> float:
        """Water speed in the tube at the current flow, m/s."""
        return self.flow / self.pump.tube_cross_section

    def contents(self) -> list[tuple[Parcel, float]]:
        """(parcel, distance along tube) pairs in FIFO order."""
        return [(p, self._travel - stamp) for stamp, p in self._fifo]

    def prime(self, position: tuple[float, float, float],
              ch4: float, co2: float, flow: float, dt: float) -> None:
        """Pre-fill the line as if the pump had been running on station.

        Parcels carry the given concentration and extrapolated negative
        intake times, so the analyzer sees water from the first sample on.
        """
        speed = flow / self.pump.tube_cross_section
        spacing = speed * dt
        if spacing <= 0.0:
            return
        n = int(self.pump.tube_length / spacing)
        for k in range(n, 0, -1):
            d = k * spacing  # distance already traveled
            parcel = Parcel(intake_time=-d / speed, intake_position=position,
                            ch4=ch4, co2=co2)
            self._fifo.append((self._travel - d, parcel))


def intake(tube: TubeState, rov_position: tuple[float, float, float],
           concentration: tuple[float, float], t: float, dt: float,
           contaminated: bool = False) -> TubeState:
    """Pull one parcel of water into the line (no-op with the pump off)."""
    _require(tube.flow >= 0.0, "flow must be nonnegative")
    if tube.flow == 0.0:
        return tube
    parcel = Parcel(intake_time=t, intake_position=rov_position,
                    ch4=concentration[0], co2=concentration[1],
                    contaminated=contaminated)
    tube._fifo.append((tube._travel, parcel))
    return tube


def advect(tube: TubeState, dt: float) -> list[Parcel]:
    """Advance the water column and return parcels that reached topside."""
    if tube.flow > 0.0:
        tube._travel += tube.linear_speed * dt
    emitted: list[Parcel] = []
    length = tube.pump.tube_length
    fifo = tube._fifo
    while fifo and tube._travel - fifo[0][0] >= length:
        emitted.append(fifo.popleft()[1])
    return emitted


@dataclass(frozen=True)
class AnalyzerSpec:
    sample_interval: float = 1.0   # s between reported measurements
    response_tau: float = 5.0      # s, first-order instrument response
    noise_ch4: float = 2.0         # nM, 1-sigma
    noise_co2: float = 10.0        # uatm, 1-sigma
    seed: int = 0

    def __post_init__(self) -> None:
        _require(self.sample_interval > 0.0, "sample_interval must be positive")
        _require(self.response_tau >= 0.0, "response_tau must be nonnegative")
        _require(self.noise_ch4 >= 0.0 and self.noise_co2 >= 0.0,
                 "noise sigmas must be nonnegative")


@dataclass(slots=True)
class Measurement:
    time: float
    ch4: float | None      # nM; None when the sample is withheld
    co2: float | None      # uatm
    valid: bool
    transit_lag: float | None  # s from inlet to analyzer for this water


class Analyzer:
    """Stateful smoothing/noise/cadence model of the topside instrument."""

    def __init__(self, spec: AnalyzerSpec):
        self.spec = spec
        self._rng = random.Random(spec.seed)
        self._ch4: float | None = None  # filter state, set by first water
        self._co2: float | None = None
        self._latest: Parcel | None = None
        self._last_t: float | None = None
        self._next_sample = spec.sample_interval

    def ingest(self, parcels: list[Parcel], t: float) -> None:
        """Feed emerging water into the instrument response filter."""
        if not parcels:
            return
        if self._last_t is None or self.spec.response_tau == 0.0:
            self._ch4 = parcels[-1].ch4
            self._co2 = parcels[-1].co2
        else:
            dt_each = (t - self._last_t) / len(parcels)
            alpha = 1.0 - math.exp(-dt_each / self.spec.response_tau)
            for p in parcels:
                self._ch4 += (p.ch4 - self._ch4) * alpha
                self._co2 += (p.co2 - self._co2) * alpha
        self._latest = parcels[-1]
        self._last_t = t

    def sample_due(self, t: float) -> bool:
        return t >= self._next_sample - 1e-9

    def sample(self, t: float) -> Measurement:
        """Report one measurement stamped at the nominal cadence time."""
        stamp = self._next_sample
        self._next_sample += self.spec.sample_interval
        noise_ch4 = self._rng.gauss(0.0, self.spec.noise_ch4)
        noise_co2 = self._rng.gauss(0.0, self.spec.noise_co2)
        if self._latest is None:
            return Measurement(time=stamp, ch4=None, co2=None,
                               valid=False, transit_lag=None)
        lag = stamp - self._latest.intake_time
        if self._latest.contaminated:
            return Measurement(time=stamp, ch4=None, co2=None,
                               valid=False, transit_lag=lag)
        # the instrument reports concentrations, never negative values
        return Measurement(time=stamp, ch4=max(0.0, self._ch4 + noise_ch4),
                           co2=max(0.0, self._co2 + noise_co2),
                           valid=True, transit_lag=lag)


def analyze(analyzer: Analyzer, emitted: list[Parcel], t: float) -> list[Measurement]:
    """Ingest this step's emerging parcels; report if a sample is due."""
    analyzer.ingest(emitted, t)
    out: list[Measurement] = []
    while analyzer.sample_due(t):
        out.append(analyzer.sample(t))
    return out


# --- lag correction ---------------------------------------------------------

@dataclass(slots=True)
class GeoSample:
    """A measurement mapped back to where its water entered the line."""

    time: float
    intake_time: float
    x: float | None
    y: float | None
    z: float | None
    ch4: float | None
    co2: float | None
    valid: bool


def lag_correct(series: list[Measurement],
                track: list[tuple[float, float, float, float]],
                flow, pump: PumpSpec) -> list[GeoSample]:
    """Georeference measurements by undoing the tube transit delay.

    `flow` is a constant m^3/s or a piecewise-constant [(time, flow), ...]
    history. Each measurement at time t is mapped to the intake time at
    which its water entered the tube (cumulative travel = tube length
    earlier) and the track is interpolated there. Intake times before the
    start of the track are dropped; times outside track coverage yield a
    null position, flagged invalid.
    """
    if not series:
        return []
    _require(len(track) >= 2, "track needs at least two points")

    t_meas = np.array([m.time for m in series])
    if isinstance(flow, (int, float)):
        _require(flow > 0.0, "flow must be positive")
        t_intake = t_meas - pump.tube_volume / float(flow)
    else:
        knot_t = np.array([t for t, _ in flow], dtype=float)
        knot_flow = np.array([q for _, q in flow], dtype=float)
        _require(np.all(np.diff(knot_t) > 0), "flow history times must increase")
        _require(np.all(knot_flow > 0.0), "flow must be positive during the series")
        # extend the history to cover the earliest possible intake and the
        # latest measurement, holding the end flows
        back = pump.tube_length / (knot_flow[0] / pump.tube_cross_section)
        end = max(float(t_meas.max()), knot_t[-1]) + 1.0
        knot_t = np.concatenate(([knot_t[0] - back - 1.0], knot_t, [end]))
        knot_flow = np.concatenate(([knot_flow[0]], knot_flow, [knot_flow[-1]]))

        # cumulative water travel S(t); piecewise linear, strictly increasing
        speed = knot_flow / pump.tube_cross_section
        seg = np.diff(knot_t) * speed[:-1]
        s_knots = np.concatenate(([0.0], np.cumsum(seg)))
        s_meas = np.interp(t_meas, knot_t, s_knots)
        s_intake = s_meas - pump.tube_length
        t_intake = np.interp(s_intake, s_knots, knot_t)

    track_t = np.array([p[0] for p in track])
    track_x = np.array([p[1] for p in track])
    track_y = np.array([p[2] for p in track])
    track_z = np.array([p[3] for p in track])

    out: list[GeoSample] = []
    t0, t1 = track_t[0], track_t[-1]
    xs = np.interp(t_intake, track_t, track_x)
    ys = np.interp(t_intake, track_t, track_y)
    zs = np.interp(t_intake, track_t, track_z)
    for m, ti, x, y, z in zip(series, t_intake, xs, ys, zs):
        if ti < t0:
            continue  # water drawn before the mission started
        if ti > t1:
            out.append(GeoSample(m.time, float(ti), None, None, None,
                                 m.ch4, m.co2, False))
        else:
            out.append(GeoSample(m.time, float(ti), float(x), float(y), float(z),
                                 m.ch4, m.co2, m.valid))
    return out
