import math

import numpy as np
import pytest

from debrisim.avoidance import (
    AvoidancePolicy,
    Conjunction,
    build_crossing_intruder,
    detect_conjunction,
    evasion_miss_km,
    plan_evasion,
    resume_deorbit,
    run_deorbit_with_avoidance,
)
from debrisim.dynamics import (
    BodyConstants,
    EciState,
    OrbitalConfig,
    circular_state,
    run_deorbit,
)

BODY = BodyConstants()
POLICY = AvoidancePolicy()

# short mission keeps the closed-loop tests fast: 800 -> 700 km
SHORT = OrbitalConfig(final_altitude_km=700.0, max_duration_s=3.0 * 86400.0)


def coast_trajectory(state, dt, n):
    from debrisim.dynamics import ThrustConfig, propagate_step
    coast = ThrustConfig(0.0, 4150.0, "off")
    out = np.empty((n + 1, 3))
    out[0] = state.position_km
    cur = state
    for i in range(1, n + 1):
        cur, _ = propagate_step(cur, coast, BODY, dt)
        out[i] = cur.position_km
    return out


class TestDetectConjunction:
    def test_identical_trajectories_zero_miss(self):
        st = circular_state(778.0, BODY, 420.0)
        traj = coast_trajectory(st, 10.0, 50)
        t = np.arange(51) * 10.0
        conj = detect_conjunction(t, traj, t, traj, POLICY)
        assert conj is not None
        assert conj.miss_km == pytest.approx(0.0, abs=1e-9)
        assert conj.tca_s == t[0]

    def test_parallel_offset_above_trigger_is_none(self):
        a = circular_state(778.0, BODY, 420.0)
        b = circular_state(788.0, BODY, 420.0)   # 10 km above, trigger 1 km
        t = np.arange(101) * 10.0
        conj = detect_conjunction(t, coast_trajectory(a, 10.0, 100),
                                  t, coast_trajectory(b, 10.0, 100), POLICY)
        assert conj is None

    def test_crossing_orbits_analytic_tca(self):
        # both vehicles reach the +x node line simultaneously at T*
        period = 2.0 * math.pi * math.sqrt((BODY.earth_radius_km + 778.0) ** 3 / BODY.mu)
        t_star = 1500.0
        phase = -2.0 * math.pi * t_star / period
        a = circular_state(778.0, BODY, 420.0, phase_rad=phase)
        b = circular_state(778.0, BODY, 420.0, phase_rad=phase,
                           inclination_rad=math.radians(25.0))
        t = np.arange(301) * 10.0
        conj = detect_conjunction(t, coast_trajectory(a, 10.0, 300),
                                  t, coast_trajectory(b, 10.0, 300), POLICY)
        assert conj is not None
        assert abs(conj.tca_s - t_star) <= 10.0

    def test_mismatched_grids_rejected(self):
        st = circular_state(778.0, BODY, 420.0)
        traj = coast_trajectory(st, 10.0, 20)
        t1 = np.arange(21) * 10.0
        t2 = t1 + 5.0
        with pytest.raises(ValueError):
            detect_conjunction(t1, traj, t2, traj, POLICY)


def crossing_setup(cfg, tca_s, angle_deg=0.1, miss_km=0.1):
    nominal = run_deorbit(cfg.initial_altitude_km, cfg.final_altitude_km, cfg)
    intruder0 = build_crossing_intruder(cfg, tca_s, angle_deg, miss_km,
                                        nominal=nominal)
    return nominal, intruder0


def intruder_state_at(intruder0, t, cfg):
    from debrisim.dynamics import ThrustConfig, propagate_step
    coast = ThrustConfig(0.0, 4150.0, "off")
    cur = intruder0
    steps = int(round(t / cfg.dt_s))
    for _ in range(steps):
        cur, _ = propagate_step(cur, coast, BODY, cfg.dt_s)
    return cur


class TestPlanEvasion:
    def test_wide_conjunction_yields_empty_plan(self):
        st = circular_state(800.0, BODY, 420.0)
        conj = Conjunction(tca_s=1800.0, miss_km=8.0, intruder="x")
        plan = plan_evasion(st, conj, POLICY, OrbitalConfig(), st)
        assert plan.empty

    def test_feasible_crossing_reaches_clearance(self):
        cfg = OrbitalConfig()
        tca = 6000.0
        nominal, intruder0 = crossing_setup(cfg, tca)
        t0 = 2000.0
        own = EciState(t0, nominal.position_km[np.searchsorted(nominal.t_s, t0)],
                       nominal.velocity_kms[np.searchsorted(nominal.t_s, t0)],
                       float(nominal.mass_kg[np.searchsorted(nominal.t_s, t0)]))
        intr = intruder_state_at(intruder0, t0, cfg)
        intr = EciState(t0, intr.position_km, intr.velocity_kms, intr.mass_kg)
        conj = Conjunction(tca_s=tca, miss_km=0.1, intruder="scripted")
        plan = plan_evasion(own, conj, POLICY, cfg, intr)
        assert not plan.empty
        assert plan.predicted_miss_km >= POLICY.clearance_km
        # closed-loop recheck at the planned duration
        recheck = evasion_miss_km(own, intr, cfg, plan.duration_s,
                                  tca - t0 + 600.0, plan.offset_deg)
        assert recheck >= POLICY.clearance_km

    def test_short_warning_names_shortfall(self):
        # 1800 s of warning cannot buy 5 km of separation at 0.237 N / 420 kg
        cfg = OrbitalConfig()
        tca = 6000.0
        nominal, intruder0 = crossing_setup(cfg, tca)
        t0 = 4200.0
        k = np.searchsorted(nominal.t_s, t0)
        own = EciState(t0, nominal.position_km[k], nominal.velocity_kms[k],
                       float(nominal.mass_kg[k]))
        intr = intruder_state_at(intruder0, t0, cfg)
        intr = EciState(t0, intr.position_km, intr.velocity_kms, intr.mass_kg)
        conj = Conjunction(tca_s=tca, miss_km=0.1, intruder="scripted")
        with pytest.raises(ValueError, match="authority insufficient"):
            plan_evasion(own, conj, POLICY, cfg, intr)

    def test_halving_thrust_never_shortens_burn(self):
        tca = 6000.0
        policy = AvoidancePolicy(trigger_km=1.0, clearance_km=2.0)
        durations = []
        for thrust in (0.237, 0.1185):
            cfg = OrbitalConfig(thrust_n=thrust)
            nominal, intruder0 = crossing_setup(cfg, tca)
            t0 = 1200.0
            k = np.searchsorted(nominal.t_s, t0)
            own = EciState(t0, nominal.position_km[k], nominal.velocity_kms[k],
                           float(nominal.mass_kg[k]))
            intr = intruder_state_at(intruder0, t0, cfg)
            intr = EciState(t0, intr.position_km, intr.velocity_kms, intr.mass_kg)
            conj = Conjunction(tca_s=tca, miss_km=0.1, intruder="scripted")
            plan = plan_evasion(own, conj, policy, cfg, intr)
            durations.append(plan.duration_s)
        assert durations[1] >= durations[0]

    def test_past_conjunction_rejected(self):
        st = circular_state(800.0, BODY, 420.0)
        later = EciState(5000.0, st.position_km, st.velocity_kms, st.mass_kg)
        conj = Conjunction(tca_s=1000.0, miss_km=0.1, intruder="x")
        with pytest.raises(ValueError):
            plan_evasion(later, conj, POLICY, OrbitalConfig(), later)


class TestMissionLoop:
    def test_threat_free_run_is_bit_identical(self):
        plain = run_deorbit(SHORT.initial_altitude_km, SHORT.final_altitude_km, SHORT)
        res = run_deorbit_with_avoidance(SHORT, POLICY, None)
        assert res.events == []
        assert res.plan is None
        assert np.array_equal(res.deorbit.position_km, plain.position_km)
        assert np.array_equal(res.deorbit.mass_kg, plain.mass_kg)
        assert res.deorbit.duration_s == plain.duration_s

    def test_scripted_crossing_closure(self):
        nominal, intruder0 = crossing_setup(SHORT, tca_s=20000.0)
        res = run_deorbit_with_avoidance(SHORT, POLICY, intruder0)
        kinds = [e.event for e in res.events]
        assert "detect" in kinds and "interrupt" in kinds and "resume" in kinds
        assert res.conjunction is not None
        assert res.conjunction.miss_km < POLICY.trigger_km
        assert res.verified_miss_km >= POLICY.clearance_km
        assert res.deorbit.complete
        # interrupt takes effect at the next integration step
        t_int = next(e.t_s for e in res.events if e.event == "interrupt")
        t_res = next(e.t_s for e in res.events if e.event == "resume")
        assert t_res - t_int == pytest.approx(res.plan.duration_s, abs=SHORT.dt_s)
        # resumed decay still trends down
        tail = res.deorbit.per_orbit_mean_altitude_km[-5:]
        assert np.all(np.diff(tail) < 0.0)

    def test_duration_penalty_within_one_orbit(self):
        nominal, intruder0 = crossing_setup(SHORT, tca_s=20000.0)
        baseline = run_deorbit(SHORT.initial_altitude_km, SHORT.final_altitude_km, SHORT)
        res = run_deorbit_with_avoidance(SHORT, POLICY, intruder0)
        orbit_s = 2.0 * math.pi * math.sqrt(
            (BODY.earth_radius_km + 800.0) ** 3 / BODY.mu)
        delta = res.deorbit.duration_s - baseline.duration_s
        assert abs(delta - res.plan.duration_s) <= orbit_s


class TestResumeDeorbit:
    def test_resume_continues_to_target(self):
        partial_cfg = OrbitalConfig(final_altitude_km=700.0,
                                    max_duration_s=40000.0)
        partial = run_deorbit(800.0, 700.0, partial_cfg)
        k = len(partial.t_s) // 2
        mid = EciState(float(partial.t_s[k]), partial.position_km[k],
                       partial.velocity_kms[k], float(partial.mass_kg[k]))
        cont = resume_deorbit(mid, SHORT)
        assert cont.complete
        assert cont.t_s[0] == mid.epoch_s


class TestPolicyInvariants:
    def test_clearance_must_cover_trigger(self):
        with pytest.raises(ValueError):
            AvoidancePolicy(trigger_km=5.0, clearance_km=1.0)

    def test_positive_horizon(self):
        with pytest.raises(ValueError):
            AvoidancePolicy(detection_horizon_s=0.0)
