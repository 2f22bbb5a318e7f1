"""Plug-flow transport, analyzer behavior, and lag correction."""

import math

import pytest

from underice.hydro import PumpSpec, tube_transit_time
from underice.sampling import (
    Analyzer,
    AnalyzerSpec,
    Measurement,
    Parcel,
    TubeState,
    advect,
    analyze,
    intake,
    lag_correct,
)

PUMP = PumpSpec()
FLOW = PUMP.nominal_flow
DT = 0.02
TRANSIT = tube_transit_time(PUMP, FLOW)  # ~36.5 s


def run_tube(tube, duration, conc=lambda t: (10.0, 500.0), position=(0, 0, 1),
             contaminated=lambda t: False):
    """Drive intake+advect at DT cadence; returns [(t, parcel), ...] emitted."""
    emitted = []
    steps = int(round(duration / DT))
    for i in range(1, steps + 1):
        t = i * DT
        intake(tube, position, conc(t), t, DT, contaminated(t))
        for p in advect(tube, DT):
            emitted.append((t, p))
    return emitted


class TestTubeTransport:
    def test_no_flow_nothing_moves(self):
        tube = TubeState(PUMP, flow=0.0)
        intake(tube, (0, 0, 1), (10.0, 500.0), 0.0, DT)
        assert len(tube) == 0  # closed intake admits nothing
        tube.flow = FLOW
        intake(tube, (0, 0, 1), (10.0, 500.0), 0.02, DT)
        tube.flow = 0.0
        assert advect(tube, DT) == []
        assert tube.contents()[0][1] == pytest.approx(0.0)

    def test_single_parcel_transit_time(self):
        tube = TubeState(PUMP, flow=FLOW)
        intake(tube, (0, 0, 1), (42.0, 900.0), 0.0, DT)
        t, emitted = 0.0, None
        while emitted is None:
            t += DT
            out = advect(tube, DT)
            if out:
                emitted = out[0]
        assert emitted.ch4 == 42.0
        assert t == pytest.approx(TRANSIT, abs=DT)

    def test_impulse_train_uniform_delay(self):
        tube = TubeState(PUMP, flow=FLOW)
        marks = {round(t, 2) for t in (5.0, 10.0, 15.0)}
        emitted = run_tube(
            tube, 60.0,
            conc=lambda t: (99.0, 500.0) if round(t, 2) in marks else (1.0, 500.0),
        )
        spikes = [t for t, p in emitted if p.ch4 == 99.0]
        assert len(spikes) == 3
        delays = [s - m for s, m in zip(spikes, sorted(marks))]
        for d in delays:
            assert d == pytest.approx(TRANSIT, abs=2 * DT)
        # identical spacing in and out
        assert spikes[1] - spikes[0] == pytest.approx(5.0, abs=2 * DT)

    def test_fifo_no_overtaking(self):
        tube = TubeState(PUMP, flow=FLOW)
        emitted = run_tube(tube, 120.0)
        times = [p.intake_time for _, p in emitted]
        assert times == sorted(times)

    def test_mass_conservation(self):
        tube = TubeState(PUMP, flow=FLOW)
        inserted = 0
        for i in range(1, 501):
            intake(tube, (0, 0, 1), (1.0, 1.0), i * DT, DT)
            inserted += 1
        emitted = []
        for _ in range(int(2 * TRANSIT / DT)):
            emitted.extend(advect(tube, DT))
        assert len(emitted) == inserted
        assert len(tube) == 0

    def test_per_parcel_delay_bound(self):
        tube = TubeState(PUMP, flow=FLOW)
        emitted = run_tube(tube, 90.0)
        for t_emit, p in emitted:
            assert t_emit - p.intake_time == pytest.approx(TRANSIT, abs=DT)

    def test_priming_fills_line(self):
        tube = TubeState(PUMP, flow=FLOW)
        tube.prime((0, 0, 0.5), 4.0, 400.0, FLOW, DT)
        assert len(tube) > 0
        distances = [d for _, d in tube.contents()]
        assert max(distances) <= PUMP.tube_length
        # first emissions happen immediately and carry the primed water
        out = advect(tube, DT)
        assert out and out[0].ch4 == 4.0
        assert out[0].intake_time < 0.0


class TestAnalyzer:
    def test_step_response_converges(self):
        spec = AnalyzerSpec(response_tau=5.0, noise_ch4=0.0, noise_co2=0.0)
        an = Analyzer(spec)
        an.ingest([Parcel(0.0, (0, 0, 0), 0.0, 0.0)], 0.0)  # init at zero
        series = []
        t = 0.0
        for i in range(1, int(30.0 / DT) + 1):
            t = i * DT
            series.extend(analyze(an, [Parcel(t - 36.5, (0, 0, 0), 100.0, 700.0)], t))
        # after >= 5 tau the output is within 1% of the constant input
        settled = [m for m in series if m.time >= 25.0]
        assert all(abs(m.ch4 - 100.0) <= 1.0 for m in settled)
        assert all(abs(m.co2 - 700.0) <= 7.0 for m in settled)

    def test_identity_configuration(self):
        spec = AnalyzerSpec(response_tau=0.0, noise_ch4=0.0, noise_co2=0.0)
        an = Analyzer(spec)
        out = analyze(an, [Parcel(0.0, (0, 0, 0), 123.0, 456.0)], 1.0)
        assert len(out) == 1
        assert out[0].ch4 == 123.0 and out[0].co2 == 456.0

    def test_contaminated_samples_withheld(self):
        spec = AnalyzerSpec(response_tau=0.0, noise_ch4=0.0, noise_co2=0.0)
        an = Analyzer(spec)
        good = analyze(an, [Parcel(0.5, (0, 0, 0), 10.0, 400.0)], 1.0)
        bad = analyze(an, [Parcel(1.5, (0, 0, 0), 10.0, 400.0, contaminated=True)], 2.0)
        assert good[0].valid and good[0].ch4 is not None
        assert not bad[0].valid and bad[0].ch4 is None and bad[0].co2 is None

    def test_cadence_counts(self):
        spec = AnalyzerSpec(noise_ch4=0.0, noise_co2=0.0)
        an = Analyzer(spec)
        out = []
        for i in range(1, int(60.0 / DT) + 1):
            t = i * DT
            out.extend(analyze(an, [Parcel(t, (0, 0, 0), 5.0, 400.0)], t))
        assert len(out) == 60
        assert [m.time for m in out] == [float(k) for k in range(1, 61)]

    def test_noise_deterministic_by_seed(self):
        def run(seed):
            an = Analyzer(AnalyzerSpec(seed=seed))
            vals = []
            for i in range(1, 501):
                t = i * DT
                vals.extend(m.ch4 for m in analyze(
                    an, [Parcel(t, (0, 0, 0), 50.0, 600.0)], t))
            return vals

        assert run(3) == run(3)
        assert run(3) != run(4)

    def test_transit_lag_positive(self):
        an = Analyzer(AnalyzerSpec(noise_ch4=0.0, noise_co2=0.0))
        out = analyze(an, [Parcel(1.0 - 36.5, (0, 0, 0), 5.0, 400.0)], 1.0)
        assert out[0].transit_lag == pytest.approx(36.5)


class TestLagCorrect:
    def test_constant_flow_exact_shift(self):
        track = [(t, 0.5 * t, 0.0, 1.0) for t in range(0, 301)]
        series = [Measurement(time=float(t), ch4=5.0, co2=400.0, valid=True,
                              transit_lag=TRANSIT) for t in range(40, 300)]
        geo = lag_correct(series, track, FLOW, PUMP)
        assert len(geo) == len(series)
        for g in geo:
            assert g.time - g.intake_time == pytest.approx(TRANSIT, rel=1e-9)
            assert g.x == pytest.approx(0.5 * g.intake_time, abs=1e-6)

    def test_pre_mission_intakes_dropped(self):
        track = [(0.0, 0, 0, 1), (300.0, 0, 0, 1)]
        series = [Measurement(float(t), 5.0, 400.0, True, TRANSIT)
                  for t in range(1, 301)]
        geo = lag_correct(series, track, FLOW, PUMP)
        # everything measured before one transit time maps before t=0
        assert len(geo) == len([m for m in series if m.time - TRANSIT >= 0.0])

    def test_stationary_track_identity(self):
        track = [(0.0, 7.0, -3.0, 1.2), (500.0, 7.0, -3.0, 1.2)]
        series = [Measurement(float(t), 5.0, 400.0, True, TRANSIT)
                  for t in range(40, 400)]
        for g in lag_correct(series, track, FLOW, PUMP):
            assert (g.x, g.y, g.z) == (7.0, -3.0, 1.2)

    def test_round_trip_recovers_intake_positions(self):
        # concentration carries the intake x-coordinate; noise and smoothing off
        speed = 0.5
        tube = TubeState(PUMP, flow=FLOW)
        an = Analyzer(AnalyzerSpec(response_tau=0.0, noise_ch4=0.0, noise_co2=0.0))
        track, series = [(0.0, 0.0, 0.0, 1.0)], []
        for i in range(1, int(200.0 / DT) + 1):
            t = i * DT
            x = speed * t
            intake(tube, (x, 0.0, 1.0), (x, 400.0), t, DT)
            series.extend(analyze(an, advect(tube, DT), t))
            if i % 10 == 0:
                track.append((t, x, 0.0, 1.0))
        geo = lag_correct([m for m in series if m.ch4 is not None],
                          track, FLOW, PUMP)
        assert geo
        for g in geo:
            # m.ch4 encodes the true intake x; one sample interval of travel
            assert abs(g.x - g.ch4) <= speed * 1.0

    def test_piecewise_flow_history(self):
        # slower first half doubles the early transit
        half = PumpSpec()
        flow_hist = [(0.0, FLOW / 2), (200.0, FLOW)]
        track = [(0.0, 0, 0, 1), (1000.0, 0, 0, 1)]
        series = [Measurement(500.0, 5.0, 400.0, True, None)]
        geo = lag_correct(series, track, flow_hist, half)
        # at t=500 flow has been FLOW since t=200: plain shift applies
        assert geo[0].intake_time == pytest.approx(500.0 - TRANSIT, rel=1e-6)
        # at t=100 the water has only ever seen half flow: transit doubles
        early = lag_correct([Measurement(100.0, 5.0, 400.0, True, None)],
                            track, flow_hist, half)
        assert early[0].intake_time == pytest.approx(100.0 - 2 * TRANSIT, rel=1e-6)
        # measured earlier than one doubled transit, intake precedes t=0: dropped
        dropped = lag_correct([Measurement(50.0, 5.0, 400.0, True, None)],
                              track, flow_hist, half)
        assert dropped == []
