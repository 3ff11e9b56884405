import math

import numpy as np
import pytest

from debrisim.dynamics import (
    BodyConstants,
    EciState,
    OrbitalConfig,
    ThrustConfig,
    circular_state,
    edelbaum_estimate,
    in_eclipse,
    mass_flow_rate,
    propagate_step,
    run_deorbit,
    specific_energy,
    thrust_accel,
    two_body_accel,
)

BODY = BodyConstants()
MU = BODY.mu
RE = BODY.earth_radius_km


def make_state(alt_km=800.0, mass=420.0):
    return circular_state(alt_km, BODY, mass)


class TestTwoBodyAccel:
    def test_on_axis_matches_inverse_square_oracle(self):
        r = RE + 800.0
        a = two_body_accel(np.array([r, 0.0, 0.0]), BODY)
        oracle = MU / r**2
        assert a[0] == pytest.approx(-oracle, rel=1e-12)
        assert a[1] == 0.0 and a[2] == 0.0

    def test_rotational_symmetry(self):
        r = RE + 800.0
        a = two_body_accel(np.array([0.0, r, 0.0]), BODY)
        assert a[1] == pytest.approx(-MU / r**2, rel=1e-12)
        assert a[0] == 0.0 and a[2] == 0.0

    def test_doubling_radius_quarters_magnitude(self):
        p = np.array([8000.0, 1000.0, -2000.0])
        a1 = np.linalg.norm(two_body_accel(p, BODY))
        a2 = np.linalg.norm(two_body_accel(2.0 * p, BODY))
        assert a1 / a2 == pytest.approx(4.0, rel=1e-12)

    def test_zero_position_rejected(self):
        with pytest.raises(ValueError):
            two_body_accel(np.zeros(3), BODY)


class TestThrustAccel:
    def test_retrograde_magnitude(self):
        st = EciState(0.0, [RE + 800, 0, 0], [7.4519, 0, 0], 420.0)
        cfg = ThrustConfig(thrust_n=0.237, isp_s=4150.0, mode="retrograde")
        a = thrust_accel(st, cfg)
        # oracle: T/m in m/s^2, converted to km/s^2, opposite the velocity
        assert a[0] == pytest.approx(-0.237 / 420.0 / 1000.0, rel=1e-12)
        assert a[1] == 0.0 and a[2] == 0.0

    def test_off_and_disabled_are_zero(self):
        st = make_state()
        cfg = ThrustConfig(thrust_n=0.237, isp_s=4150.0, mode="off")
        assert np.all(thrust_accel(st, cfg) == 0.0)
        cfg2 = ThrustConfig(thrust_n=0.237, isp_s=4150.0, mode="retrograde")
        assert np.all(thrust_accel(st, cfg2, enabled=False) == 0.0)

    def test_prograde_is_sign_flip_of_retrograde(self):
        st = make_state()
        retro = thrust_accel(st, ThrustConfig(0.237, 4150.0, "retrograde"))
        pro = thrust_accel(st, ThrustConfig(0.237, 4150.0, "prograde"))
        assert np.allclose(pro, -retro, rtol=0, atol=0)

    def test_zero_velocity_rejected(self):
        st = EciState(0.0, [RE + 800, 0, 0], [0, 0, 0], 420.0)
        with pytest.raises(ValueError):
            thrust_accel(st, ThrustConfig(0.237, 4150.0, "retrograde"))

    def test_inertial_fixed_direction(self):
        st = make_state()
        cfg = ThrustConfig(0.42, 4150.0, "inertial-fixed", direction=(0.0, 0.0, 2.0))
        a = thrust_accel(st, cfg)
        assert a[0] == 0.0 and a[1] == 0.0
        assert a[2] == pytest.approx(0.42 / 420.0 / 1000.0, rel=1e-12)


class TestMassFlowRate:
    def test_next_datasheet_point(self):
        cfg = ThrustConfig(0.237, 4150.0)
        assert mass_flow_rate(cfg, BODY) == pytest.approx(
            0.237 / (4150.0 * 9.80665), rel=1e-12)

    def test_zero_thrust(self):
        assert mass_flow_rate(ThrustConfig(0.0, 4150.0, "off"), BODY) == 0.0

    def test_halving_isp_doubles_flow(self):
        f1 = mass_flow_rate(ThrustConfig(0.237, 4150.0), BODY)
        f2 = mass_flow_rate(ThrustConfig(0.237, 2075.0), BODY)
        assert f2 / f1 == pytest.approx(2.0, rel=1e-12)


class TestEclipse:
    def test_antisolar_point_shadowed(self):
        st = EciState(0.0, [-(RE + 800.0), 0, 0], [0, 7.45, 0], 420.0)
        assert in_eclipse(st, BODY)

    def test_sunlit_side_clear(self):
        st = EciState(0.0, [RE + 800.0, 0, 0], [0, 7.45, 0], 420.0)
        assert not in_eclipse(st, BODY)

    def test_shadow_fraction_at_778km_matches_chord_oracle(self):
        # analytic shadowed arc of a circular orbit with the sun in-plane
        r = RE + 778.0
        oracle = 2.0 * math.asin(RE / r) / (2.0 * math.pi)
        phases = np.linspace(0.0, 2.0 * math.pi, 20000, endpoint=False)
        flags = [
            in_eclipse(circular_state(778.0, BODY, 420.0, phase_rad=p), BODY)
            for p in phases
        ]
        frac = np.mean(flags)
        assert frac == pytest.approx(oracle, abs=5e-4)
        assert abs(frac - 0.36) <= 0.02


def _period(alt_km):
    return 2.0 * math.pi * math.sqrt((RE + alt_km) ** 3 / MU)


def _propagate(state, cfg, dt, n):
    truncated = False
    for _ in range(n):
        state, t = propagate_step(state, cfg, BODY, dt)
        truncated = truncated or t
    return state, truncated


COAST = ThrustConfig(0.0, 4150.0, "off")


class TestPropagateStep:
    def test_full_period_closure(self):
        st = make_state(800.0)
        period = _period(800.0)
        n = int(period // 10.0)
        end, _ = _propagate(st, COAST, 10.0, n)
        end, _ = propagate_step(end, COAST, BODY, period - n * 10.0)
        assert np.linalg.norm(end.position_km - st.position_km) < 1e-3

    def test_tiny_step_continuity(self):
        # dt -> 0 limit: displacement shrinks to the linear drift v*dt
        st = make_state(800.0)
        end, _ = propagate_step(st, COAST, BODY, 1e-6)
        dr = end.position_km - st.position_km
        assert np.linalg.norm(dr - st.velocity_kms * 1e-6) < 1e-12
        assert np.linalg.norm(dr) < 1e-5

    def test_nonpositive_dt_rejected(self):
        with pytest.raises(ValueError):
            propagate_step(make_state(), COAST, BODY, 0.0)

    def test_energy_conserved_per_step(self):
        st = make_state(800.0)
        e0 = specific_energy(st, BODY)
        end, _ = propagate_step(st, COAST, BODY, 10.0)
        assert abs((specific_energy(end, BODY) - e0) / e0) < 1e-10

    def test_ten_orbit_energy_and_momentum_conservation(self):
        st = make_state(800.0)
        e0 = specific_energy(st, BODY)
        h0 = np.linalg.norm(np.cross(st.position_km, st.velocity_kms))
        n = int(10.0 * _period(800.0) / 10.0)
        cur = st
        worst_e = worst_h = 0.0
        for _ in range(n):
            cur, _ = propagate_step(cur, COAST, BODY, 10.0)
            e = specific_energy(cur, BODY)
            h = np.linalg.norm(np.cross(cur.position_km, cur.velocity_kms))
            worst_e = max(worst_e, abs((e - e0) / e0))
            worst_h = max(worst_h, abs((h - h0) / h0))
        assert worst_e < 1e-9
        assert worst_h < 1e-9

    def test_retrograde_thrust_strictly_dissipates_energy(self):
        cfg = ThrustConfig(0.237, 4150.0, "retrograde", mass_floor_kg=400.0)
        cur = make_state(800.0)
        prev = specific_energy(cur, BODY)
        for _ in range(int(_period(800.0) / 10.0)):
            cur, _ = propagate_step(cur, cfg, BODY, 10.0)
            e = specific_energy(cur, BODY)
            assert e < prev
            prev = e

    def test_mass_bookkeeping_exact(self):
        cfg = ThrustConfig(0.237, 4150.0, "retrograde", mass_floor_kg=400.0)
        end, _ = _propagate(make_state(), cfg, 10.0, 1000)
        expected = 420.0 - mass_flow_rate(cfg, BODY) * 10000.0
        assert abs(end.mass_kg - expected) / 420.0 < 1e-12

    def test_step_halving_is_fourth_order(self):
        st = make_state(800.0)
        period = _period(800.0)

        def closure_error(dt):
            n = int(period // dt)
            end, _ = _propagate(st, COAST, dt, n)
            rem = period - n * dt
            if rem > 1e-12:
                end, _ = propagate_step(end, COAST, BODY, rem)
            return np.linalg.norm(end.position_km - st.position_km)

        ratio = closure_error(40.0) / closure_error(20.0)
        assert 8.0 <= ratio <= 32.0

    def test_mass_floor_truncates_thrust_and_flags(self):
        cfg = ThrustConfig(0.237, 4150.0, "retrograde", mass_floor_kg=419.9999)
        st = make_state()
        end, truncated = propagate_step(st, cfg, BODY, 100.0)
        assert truncated
        assert end.mass_kg == pytest.approx(419.9999, abs=1e-9)


class TestEdelbaum:
    def test_direct_formula(self):
        t = edelbaum_estimate(800.0, 100.0, 0.237, 420.0, BODY)
        r1, r2 = RE + 800.0, RE + 100.0
        dv = abs(math.sqrt(MU / r1) - math.sqrt(MU / r2)) * 1000.0
        assert t == pytest.approx(dv * 420.0 / 0.237, rel=1e-12)
        assert t == pytest.approx(6.95e5, abs=2e3)

    def test_equal_altitudes_zero(self):
        assert edelbaum_estimate(500.0, 500.0, 0.237, 420.0, BODY) == 0.0

    def test_doubling_thrust_halves_duration(self):
        t1 = edelbaum_estimate(800.0, 100.0, 0.237, 420.0, BODY)
        t2 = edelbaum_estimate(800.0, 100.0, 0.474, 420.0, BODY)
        assert t1 / t2 == pytest.approx(2.0, rel=1e-12)


class TestRunDeorbit:
    def test_duration_matches_edelbaum_within_10pct(self, default_deorbit, default_orbital):
        est = edelbaum_estimate(800.0, 100.0, 0.237, 420.0, BODY)
        assert abs(default_deorbit.duration_s - est) <= 0.1 * est
        assert default_deorbit.complete
        assert default_deorbit.termination == "target-altitude"

    def test_per_orbit_mean_altitude_monotone(self, default_deorbit):
        means = default_deorbit.per_orbit_mean_altitude_km
        assert len(means) > 100
        assert np.all(np.diff(means) <= 1e-6)

    def test_propellant_consistent_with_flow(self, default_deorbit, default_orbital):
        flow = mass_flow_rate(default_orbital.thrust_config(), BODY)
        expected = flow * default_deorbit.duration_s
        assert default_deorbit.propellant_used_kg == pytest.approx(expected, rel=1e-6)

    def test_no_thrust_aborts_at_max_duration(self):
        cfg = OrbitalConfig(thrust_n=0.0, thrust_mode="off", max_duration_s=3000.0)
        res = run_deorbit(800.0, 100.0, cfg)
        assert not res.complete
        assert res.termination == "max-duration"

    def test_propellant_exhaustion_flagged(self):
        cfg = OrbitalConfig(propellant_kg=0.01, max_duration_s=86400.0)
        res = run_deorbit(800.0, 100.0, cfg)
        assert not res.complete
        assert res.termination == "propellant-exhausted"
        assert res.mass_kg[-1] == pytest.approx(400.0, abs=1e-9)

    def test_bad_altitudes_rejected(self):
        with pytest.raises(ValueError):
            run_deorbit(100.0, 800.0, OrbitalConfig())

    def test_drag_hook_dissipates_energy(self):
        from debrisim.dynamics import DragConfig
        drag = DragConfig(cd_area_over_mass_m2_kg=0.05, rho0_kg_m3=1e-9,
                          h0_km=400.0, scale_height_km=120.0)
        cfg = OrbitalConfig(thrust_n=0.0, thrust_mode="off",
                            initial_altitude_km=400.0, final_altitude_km=100.0,
                            drag=drag, max_duration_s=6000.0)
        res = run_deorbit(400.0, 100.0, cfg)
        e0 = 0.5 * np.dot(res.velocity_kms[0], res.velocity_kms[0]) - MU / (
            np.linalg.norm(res.position_km[0]))
        e1 = 0.5 * np.dot(res.velocity_kms[-1], res.velocity_kms[-1]) - MU / (
            np.linalg.norm(res.position_km[-1]))
        assert e1 < e0
