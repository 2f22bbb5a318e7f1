"""Scenario document parsing, validation, and command scripts."""

import pytest

from underice.scenario import (
    ConfigError,
    ScriptError,
    load_config,
    parse_script,
)


class TestLoadConfig:
    def test_empty_document_is_default_scenario(self):
        cfg = load_config("")
        assert cfg.world.bottom_depth == 1.8
        assert cfg.spool.capacity == 150.0
        assert cfg.motor.rated_power == 372.85
        assert cfg.duration == 3600.0
        assert cfg.sediment.intervals == ((2200.0, 2920.0),)
        assert len(cfg.gas.plumes) == 1

    def test_override_key(self):
        cfg = load_config("[mission]\nduration_s = 60\nsediment_windows_s = none\n")
        assert cfg.duration == 60.0
        assert cfg.sediment.intervals == ()

    def test_unknown_section_rejected(self):
        with pytest.raises(ConfigError, match="unknown section"):
            load_config("[turbojet]\nthrust = 9000\n")

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown key spool.colour"):
            load_config("[spool]\ncolour = red\n")

    def test_invariant_violation_names_field(self):
        with pytest.raises(ConfigError, match=r"\[spool\]"):
            load_config("[spool]\ncapacity_m = -1\n")

    def test_parse_error_diagnostics(self):
        with pytest.raises(ConfigError, match="parse error"):
            load_config("not an ini document at all\n")

    def test_non_numeric_value(self):
        with pytest.raises(ConfigError, match="motor.gear_ratio"):
            load_config("[motor]\ngear_ratio = many\n")

    def test_multiple_problems_enumerated(self):
        doc = "[spool]\ncapacity_m = -1\n[motor]\ngear_ratio = 0\n"
        with pytest.raises(ConfigError) as err:
            load_config(doc)
        assert len(err.value.problems) >= 2

    def test_plume_override_replaces_default(self):
        doc = ("[gas]\n"
               "plume1 = 10, 0, 0.5, 5, 5, 1, 50, 100\n"
               "plume2 = -20, 5, 0.5, 8, 8, 1, 30, 60\n")
        cfg = load_config(doc)
        assert len(cfg.gas.plumes) == 2
        assert cfg.gas.plumes[0].ch4_amplitude == 50.0

    def test_plume_none_clears(self):
        cfg = load_config("[gas]\nplume1 = none\n")
        assert cfg.gas.plumes == ()

    def test_bad_plume_value(self):
        with pytest.raises(ConfigError, match="gas.plume1"):
            load_config("[gas]\nplume1 = 1, 2, 3\n")

    def test_sediment_outside_duration_rejected(self):
        doc = "[mission]\nduration_s = 600\n"  # default window ends at 2920
        with pytest.raises(ConfigError, match="sediment"):
            load_config(doc)


class TestParseScript:
    def test_full_vocabulary(self):
        text = """
        # mission script
        t=0 pump power on
        t=5 winch slider -50
        t=10 rov thrust 0.5 0 0.1 0.02
        t=20 winch estop
        t=25 winch estop_reset
        t=30 winch breaker_open
        t=31 winch breaker_close
        t=40 pump power off
        t=50 sim stop
        """
        records = parse_script(text)
        assert [r[1][0] for r in records] == [
            "pump_power", "winch_slider", "rov_thrust", "estop",
            "estop_reset", "breaker", "breaker", "pump_power", "sim_stop",
        ]
        assert records[2][1][1] == (0.5, 0.0, 0.1, 0.02)

    def test_sorted_by_time(self):
        records = parse_script("t=10 winch slider 5\nt=2 winch slider 1\n")
        assert [r[0] for r in records] == [2.0, 10.0]

    def test_bad_line_reports_line_number(self):
        with pytest.raises(ScriptError, match="line 2"):
            parse_script("t=0 pump power on\nt=1 winch warp 9\n")

    def test_bad_thrust_arity(self):
        with pytest.raises(ScriptError, match="thrust"):
            parse_script("t=0 rov thrust 1 0\n")

    def test_missing_time_prefix(self):
        with pytest.raises(ScriptError, match="t="):
            parse_script("winch slider 5\n")

    def test_empty_script(self):
        assert parse_script("") == []
        assert parse_script("# nothing but comments\n") == []
