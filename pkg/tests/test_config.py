import math

import pytest

from debrisim.config import (
    _SCHEMA,
    ConfigError,
    default_config,
    dump_config,
    load_config,
)


class TestLoadConfig:
    def test_empty_file_equals_defaults(self, tmp_path):
        p = tmp_path / "empty.cfg"
        p.write_text("")
        assert load_config(p) == default_config()

    def test_round_trip_of_effective_config(self, tmp_path):
        cfg = default_config()
        p = tmp_path / "eff.cfg"
        dump_config(cfg, p)
        assert load_config(p) == cfg

    def test_round_trip_of_modified_config(self, tmp_path):
        p = tmp_path / "mod.cfg"
        p.write_text("[orbital]\nthrust_n = 0.3\nisp_s = 4200\n"
                     "[dtn]\npr_outages = 100:200,300:450\n"
                     "[power]\nbattery_capacity_wh = 4100\n")
        cfg = load_config(p)
        assert cfg["orbital", "thrust_n"] == 0.3
        assert cfg["dtn", "pr_outages"] == ((100.0, 200.0), (300.0, 450.0))
        q = tmp_path / "echo.cfg"
        dump_config(cfg, q)
        assert load_config(q) == cfg

    def test_invariant_violation_names_key_and_line(self, tmp_path):
        p = tmp_path / "bad.cfg"
        p.write_text("[orbital]\nthrust_n = -1\n")
        with pytest.raises(ConfigError) as err:
            load_config(p)
        assert "thrust_n" in str(err.value)
        assert "bad.cfg:2" in str(err.value)

    def test_unknown_key_rejected_with_line(self, tmp_path):
        p = tmp_path / "unknown.cfg"
        p.write_text("[orbital]\n# comment\nwarp_factor = 9\n")
        with pytest.raises(ConfigError) as err:
            load_config(p)
        assert "line 3" in str(err.value)
        assert "warp_factor" in str(err.value)

    def test_unknown_section_rejected(self, tmp_path):
        p = tmp_path / "sec.cfg"
        p.write_text("[propulsion]\nthrust_n = 1\n")
        with pytest.raises(ConfigError, match="unknown section"):
            load_config(p)

    def test_type_mismatch_rejected_with_line(self, tmp_path):
        p = tmp_path / "type.cfg"
        p.write_text("[power]\nbus_w = heavy\n")
        with pytest.raises(ConfigError) as err:
            load_config(p)
        assert "line 2" in str(err.value) and "bus_w" in str(err.value)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.cfg")

    def test_inline_comments_and_unlimited(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("[dtn]\nbuffer_capacity = unlimited  # no drops\n")
        cfg = load_config(p)
        assert math.isinf(cfg["dtn", "buffer_capacity"])


class TestBuilders:
    def test_module_configs_constructible(self):
        cfg = default_config()
        assert cfg.orbital().initial_mass_kg == 420.0
        assert cfg.power().battery_capacity_wh == 5700.0
        assert cfg.nav_proximity().process_noise_q == 1e-6
        assert cfg.nav_longduration().thrust_n == 0.3
        assert len(cfg.topology().links) == 2
        assert cfg.geometry_topology().links[0].mode == "geometry"
        assert len(cfg.traffic().classes) == 3
        assert cfg.avoidance_policy().clearance_km == 5.0

    def test_sun_direction_threaded_to_body(self, tmp_path):
        p = tmp_path / "sun.cfg"
        p.write_text("[orbital]\nsun_direction = 0,1,0\n")
        cfg = load_config(p)
        assert cfg.body().sun_direction == (0.0, 1.0, 0.0)


class TestTunableRegistry:
    """Every documented design-decision tunable is reachable from the config."""

    REGISTRY = [
        ("orbital", "dt_s"),                    # fixed-step integrator
        ("orbital", "isp_s"),                   # datasheet midpoint
        ("orbital", "sun_direction"),           # fixed scenario sun vector
        ("orbital", "drag_cd_area_over_mass"),  # drag hook, default off
        ("orbital", "thrust_n"),
        ("power", "battery_capacity_wh"),       # top of the sizing band
        ("power", "max_charge_w"),              # charge acceptance
        ("power", "bus_w"),                     # housekeeping load
        ("power", "round_trip_efficiency"),     # default lossless
        ("nav", "sigma_angle_rad"),             # declared angle-noise assumption
        ("nav", "q_proximity"),
        ("nav", "q_longduration"),
        ("nav", "filter_step_s"),               # 1 Hz measurement rate
        ("nav", "chief_altitude_km"),           # mean-motion regime
        ("nav", "truth_dt_proximity_s"),
        ("dtn", "pr_mean_db"),                  # SNR profile calibration
        ("dtn", "pr_outages"),                  # scheduled outage windows
        ("dtn", "pr_rate_table"),               # stepped rate ladder
        ("dtn", "rg_rate_table"),
        ("dtn", "safety_interval_s"),           # calibration traffic
        ("dtn", "bulk_size_b"),
        ("dtn", "buffer_capacity"),             # unlimited by default
        ("avoidance", "trigger_km"),
        ("avoidance", "clearance_km"),
        ("avoidance", "detection_range_km"),
        ("avoidance", "thrust_offset_deg"),
        ("run", "mjd_offset_days"),             # display-epoch offset
        ("run", "relay_altitude_km"),           # relay orbit assumption
        ("run", "gs_lat_deg"),                  # ground-station assumption
        ("run", "seed"),
    ]

    def test_all_registered_tunables_exist(self):
        for section, key in self.REGISTRY:
            assert key in _SCHEMA[section], f"[{section}] {key} missing"

    def test_dump_covers_every_key(self, tmp_path):
        p = tmp_path / "all.cfg"
        dump_config(default_config(), p)
        text = p.read_text()
        for section, keys in _SCHEMA.items():
            assert f"[{section}]" in text
            for key in keys:
                assert f"{key} = " in text
