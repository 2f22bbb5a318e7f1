"""Gas field, ice geometry, vehicle kinematics, and sediment windows."""

import math

import pytest
from hypothesis import given, strategies as st

from underice.environment import (
    GasField,
    GasPlume,
    IceSheet,
    RovConfig,
    RovState,
    SedimentSchedule,
    WorldGeometry,
    gas_at,
    is_contaminated,
    step_rov,
)
from underice.hydro import DomainError
from underice.winch import TetherState

DT = 0.02

MAIN_PLUME = GasPlume(center=(60.0, 20.0, 0.5), sigma=(10.0, 10.0, 1.5),
                      ch4_amplitude=296.0, co2_amplitude=850.0)
FIELD = GasField(plumes=(MAIN_PLUME,))
ICE = IceSheet()
WORLD = WorldGeometry()
ROVCFG = RovConfig()


class TestGasField:
    def test_background_far_from_plumes(self):
        ch4, co2 = gas_at(FIELD, (-150.0, -150.0, 1.0))
        assert ch4 == pytest.approx(4.0, abs=1e-6)
        assert co2 == pytest.approx(400.0, abs=1e-3)

    def test_plume_center_calibrated_peaks(self):
        ch4, co2 = gas_at(FIELD, MAIN_PLUME.center)
        assert ch4 == pytest.approx(300.0)
        assert co2 == pytest.approx(1250.0)

    def test_one_sigma_falloff(self):
        x = MAIN_PLUME.center[0] + MAIN_PLUME.sigma[0]
        ch4, _ = gas_at(FIELD, (x, MAIN_PLUME.center[1], MAIN_PLUME.center[2]))
        assert ch4 == pytest.approx(4.0 + 296.0 * math.exp(-0.5))

    def test_trend_adds_with_distance(self):
        field = GasField(trend_ch4_per_m=0.1)
        ch4_near, _ = gas_at(field, (0.0, 0.0, 1.0))
        ch4_far, _ = gas_at(field, (100.0, 0.0, 1.0))
        assert ch4_near == pytest.approx(4.0)
        assert ch4_far == pytest.approx(14.0)

    @given(st.floats(min_value=-200, max_value=200),
           st.floats(min_value=-200, max_value=200),
           st.floats(min_value=0.0, max_value=1.8))
    def test_never_below_background(self, x, y, z):
        ch4, co2 = gas_at(FIELD, (x, y, z))
        assert ch4 >= FIELD.background_ch4
        assert co2 >= FIELD.background_co2


class TestIceSheet:
    def test_thin_at_shore(self):
        assert ICE.thickness_at(0.0, 0.0) == pytest.approx(0.05)

    def test_thick_far_out(self):
        assert ICE.thickness_at(100.0, 0.0) == pytest.approx(0.125)

    def test_draft_fraction(self):
        assert ICE.draft_at(100.0, 0.0) == pytest.approx(0.9 * 0.125)

    def test_bad_config(self):
        with pytest.raises(DomainError):
            IceSheet(shore_thickness=0.2, far_thickness=0.1)


class TestSediment:
    SCHED = SedimentSchedule(intervals=((2200.0, 2920.0),))

    def test_before(self):
        assert not is_contaminated(self.SCHED, 100.0)

    def test_inside(self):
        assert is_contaminated(self.SCHED, 2500.0)

    def test_boundaries(self):
        assert is_contaminated(self.SCHED, 2200.0)   # closed start
        assert not is_contaminated(self.SCHED, 2920.0)  # open end

    def test_overlapping_rejected(self):
        with pytest.raises(DomainError):
            SedimentSchedule(intervals=((0.0, 10.0), (5.0, 20.0)))


class TestStepRov:
    def test_zero_command_hotel_drain_only(self):
        rov = RovState(x=5.0, y=5.0, z=1.0)
        e0 = rov.battery_remaining
        step_rov(rov, ROVCFG, (0, 0, 0, 0), WORLD, ICE, None, DT)
        assert (rov.x, rov.y, rov.z) == (5.0, 5.0, 1.0)
        assert rov.battery_remaining == pytest.approx(
            e0 - ROVCFG.hotel_load_w * DT / 3600.0
        )

    def test_full_surge_step_response(self):
        rov = RovState(x=0.0, y=0.0, z=1.0)
        for _ in range(int(10.0 / DT)):
            step_rov(rov, ROVCFG, (1, 0, 0, 0), WORLD, ICE, None, DT)
        # analytic first-order distance: v_max*(T - tau*(1 - e^{-T/tau}))
        expected = 1.0 * (10.0 - 1.0 * (1 - math.exp(-10.0)))
        assert rov.x == pytest.approx(expected, rel=0.02)

    def test_ceiling_clamp(self):
        rov = RovState(x=0.0, y=0.0, z=0.2)
        for _ in range(int(5.0 / DT)):
            step_rov(rov, ROVCFG, (0, 0, -1, 0), WORLD, ICE, None, DT)
        assert rov.z == pytest.approx(ICE.draft_at(rov.x, rov.y))

    def test_bottom_clamp(self):
        rov = RovState(z=1.5)
        for _ in range(int(5.0 / DT)):
            step_rov(rov, ROVCFG, (0, 0, 1, 0), WORLD, ICE, None, DT)
        assert rov.z == WORLD.bottom_depth

    def test_taut_tether_blocks_outward_motion(self):
        rov = RovState(x=20.0, y=0.0, z=1.0)
        tether = TetherState(deployed_length=20.0, straight_line_distance=20.0,
                             slack=0.0, taut=True)
        for _ in range(int(5.0 / DT)):
            step_rov(rov, ROVCFG, (1, 0, 0, 0), WORLD, ICE, tether, DT)
        reach = tether.deployed_length
        dist = math.sqrt(rov.x ** 2 + rov.y ** 2 + rov.z ** 2)
        assert dist <= reach + rov.max_speed * DT

    def test_full_throttle_endurance(self):
        rov = RovState(battery_remaining=ROVCFG.battery_capacity)
        t = 0.0
        while not rov.depleted and t < 5000.0:
            step_rov(rov, ROVCFG, (1, 0, 0, 0), WORLD, ICE, None, DT)
            t += DT
        assert t == pytest.approx(3600.0, rel=0.05)

    def test_battery_monotone_and_low_event(self):
        rov = RovState(battery_remaining=10.05)
        events = []
        prev = rov.battery_remaining
        for _ in range(200):
            step_rov(rov, ROVCFG, (1, 0, 0, 0), WORLD, ICE, None, DT, events)
            assert rov.battery_remaining <= prev
            prev = rov.battery_remaining
        assert any(kind == "battery_low" for kind, _ in events)

    def test_determinism(self):
        def run():
            rov = RovState()
            for i in range(500):
                cmd = (math.sin(i * 0.01), 0.2, 0.1, 0.05)
                step_rov(rov, ROVCFG, cmd, WORLD, ICE, None, DT)
            return (rov.x, rov.y, rov.z, rov.heading, rov.battery_remaining)

        assert run() == run()

    def test_depleted_battery_stops_thrusters(self):
        rov = RovState(x=10.0, battery_remaining=0.0)
        step_rov(rov, ROVCFG, (1, 0, 0, 0), WORLD, ICE, None, DT)
        assert rov.x == 10.0
