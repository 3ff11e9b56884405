"""Conjunction detection, evasion planning and deorbit resumption.

The local avoidance layer watches a scripted intruder trajectory behind a
detection-range gate, predicts the encounter, and when the predicted miss
distance falls below the trigger it redirects the ion thrust: the thrust
vector is rotated away from retrograde toward the orbit normal by the
policy's offset angle for a burn duration found by bisection, then the
nominal retrograde deorbit resumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import (
    DeorbitResult,
    EciState,
    OrbitalConfig,
    ThrustConfig,
    _rk4,
    _state_tuple,
    circular_state,
    run_deorbit,
)


@dataclass(frozen=True)
class Conjunction:
    """Predicted closest approach below the policy trigger."""

    tca_s: float
    miss_km: float
    intruder: str

    def __post_init__(self):
        if self.miss_km < 0:
            raise ValueError("miss distance must be non-negative")


@dataclass(frozen=True)
class AvoidancePolicy:
    detection_horizon_s: float = 7200.0
    trigger_km: float = 1.0
    clearance_km: float = 5.0
    detection_range_km: float = 50.0
    thrust_offset_deg: float = 90.0
    check_interval_s: float = 60.0
    prediction_dt_s: float = 10.0

    def __post_init__(self):
        if not self.clearance_km >= self.trigger_km > 0:
            raise ValueError("need clearance >= trigger > 0")
        if self.detection_horizon_s <= 0:
            raise ValueError("detection horizon must be positive")


@dataclass(frozen=True)
class EvasionPlan:
    """Thrust-direction override: offset angle held for a burn duration."""

    offset_deg: float
    duration_s: float
    predicted_miss_km: float

    @property
    def empty(self) -> bool:
        return self.duration_s == 0.0


def detect_conjunction(
    own_t: np.ndarray,
    own_pos: np.ndarray,
    intruder_t: np.ndarray,
    intruder_pos: np.ndarray,
    policy: AvoidancePolicy,
    intruder: str = "intruder",
) -> Conjunction | None:
    """Minimum-distance event below the trigger over the common horizon.

    Both trajectories must share the sampling grid. The discrete minimum
    is refined by quadratic interpolation of the squared distance.
    """
    if own_t.shape != intruder_t.shape or not np.array_equal(own_t, intruder_t):
        raise ValueError("trajectories must share a common time grid")
    horizon = own_t[0] + policy.detection_horizon_s
    sel = own_t <= horizon
    t = own_t[sel]
    d = np.linalg.norm(own_pos[sel] - intruder_pos[sel], axis=1)
    k = int(np.argmin(d))
    tca, miss = float(t[k]), float(d[k])
    if 0 < k < len(t) - 1:
        # parabola through the three squared distances around the minimum
        y0, y1, y2 = d[k - 1] ** 2, d[k] ** 2, d[k + 1] ** 2
        denom = y0 - 2.0 * y1 + y2
        if denom > 0:
            delta = 0.5 * (y0 - y2) / denom
            delta = max(-1.0, min(1.0, delta))
            h = float(t[k + 1] - t[k])
            tca = float(t[k]) + delta * h
            miss = math.sqrt(max(y1 - 0.25 * (y0 - y2) * delta, 0.0))
    if miss >= policy.trigger_km:
        return None
    return Conjunction(tca_s=tca, miss_km=miss, intruder=intruder)


def _coast(s, dt, n_steps, body):
    out = np.empty((n_steps + 1, 3))
    out[0] = s[0:3]
    for i in range(1, n_steps + 1):
        s = _rk4(s, dt, body.mu, 0.0, -1, 0.0, 0.0, 0.0, 0.0)
        out[i] = s[0:3]
    return s, out


def _offset_trajectory(s, cfg: OrbitalConfig, burn_s: float, total_s: float,
                       offset_rad: float, dt: float):
    """Own positions: offset-mode burn for burn_s, then nominal retrograde."""
    body = cfg.body
    mdot = cfg.thrust_n / (cfg.isp_s * body.g0)
    a_n = cfg.thrust_n / 1000.0
    c, so = math.cos(offset_rad), math.sin(offset_rad)
    n_steps = int(round(total_s / dt))
    n_burn = min(int(round(burn_s / dt)), n_steps)
    out = np.empty((n_steps + 1, 3))
    out[0] = s[0:3]
    for i in range(1, n_steps + 1):
        if i <= n_burn:
            s = _rk4(s, dt, body.mu, a_n, 3, c, so, 0.0, mdot)
        else:
            s = _rk4(s, dt, body.mu, a_n, 0, 0.0, 0.0, 0.0, mdot)
        out[i] = s[0:3]
    return out


def evasion_miss_km(state: EciState, intruder: EciState, cfg: OrbitalConfig,
                    burn_s: float, until_s: float, offset_deg: float,
                    dt: float = 10.0) -> float:
    """Re-propagated miss distance for a candidate burn duration."""
    own = _offset_trajectory(_state_tuple(state), cfg, burn_s, until_s,
                             math.radians(offset_deg), dt)
    n_steps = own.shape[0] - 1
    _, other = _coast(_state_tuple(intruder), dt, n_steps, cfg.body)
    return float(np.linalg.norm(own - other, axis=1).min())


def plan_evasion(
    state: EciState,
    conj: Conjunction,
    policy: AvoidancePolicy,
    cfg: OrbitalConfig,
    intruder_state: EciState,
) -> EvasionPlan:
    """Minimal-duration thrust-offset burn that re-propagates clear.

    Bisection over the burn duration against the closed-loop re-propagated
    miss distance; raises when even burning until closest approach cannot
    reach the clearance distance.
    """
    if conj.tca_s <= state.epoch_s:
        raise ValueError("conjunction must lie in the future")
    if conj.miss_km >= policy.clearance_km:
        return EvasionPlan(policy.thrust_offset_deg, 0.0, conj.miss_km)
    dt = policy.prediction_dt_s
    window = conj.tca_s - state.epoch_s
    until = window + 600.0          # keep checking shortly past nominal TCA
    d_max = window

    def miss(burn: float) -> float:
        return evasion_miss_km(state, intruder_state, cfg, burn, until,
                               policy.thrust_offset_deg, dt)

    best = miss(d_max)
    if best < policy.clearance_km:
        raise ValueError(
            f"evasion authority insufficient: full {d_max:.0f} s burn reaches "
            f"{best:.2f} km < clearance {policy.clearance_km:.2f} km")
    lo, hi = 0.0, d_max
    for _ in range(24):
        if hi - lo <= dt:
            break
        mid = 0.5 * (lo + hi)
        if miss(mid) >= policy.clearance_km:
            hi = mid
        else:
            lo = mid
    achieved = miss(hi)
    if achieved < policy.clearance_km:   # non-monotone pocket: fall back
        hi, achieved = d_max, best
    return EvasionPlan(policy.thrust_offset_deg, hi, achieved)


def resume_deorbit(state: EciState, cfg: OrbitalConfig) -> DeorbitResult:
    """Continue the nominal retrograde deorbit from the given state."""
    return run_deorbit(cfg.initial_altitude_km, cfg.final_altitude_km, cfg,
                       initial_state=state)


@dataclass
class AvoidanceEvent:
    t_s: float
    event: str          # detect | interrupt | resume | clear
    intruder: str
    miss_km: float
    action: str


@dataclass
class AvoidanceResult:
    deorbit: DeorbitResult
    events: list[AvoidanceEvent]
    plan: EvasionPlan | None
    conjunction: Conjunction | None
    verified_miss_km: float | None   # from re-simulation of the flown trajectory


def build_crossing_intruder(
    cfg: OrbitalConfig,
    tca_s: float,
    cross_angle_deg: float,
    miss_km: float,
    nominal: DeorbitResult | None = None,
) -> EciState:
    """Scripted intruder on a circular orbit crossing the nominal deorbit.

    The nominal trajectory is flown to ``tca_s``; the intruder is placed
    at that point (offset radially by the nominal miss) with the same
    speed, its velocity rotated about the radial axis by the crossing
    angle, then propagated back to scenario start.
    """
    body = cfg.body
    if nominal is None:
        probe_cfg = _with_max_duration(cfg, tca_s)
        nominal = run_deorbit(cfg.initial_altitude_km, cfg.final_altitude_km, probe_cfg)
    k = int(np.argmin(np.abs(nominal.t_s - tca_s)))
    pos = nominal.position_km[k].copy()
    vel = nominal.velocity_kms[k].copy()
    t_at = float(nominal.t_s[k])
    rhat = pos / np.linalg.norm(pos)
    ang = math.radians(cross_angle_deg)
    vel_rot = (vel * math.cos(ang) + np.cross(rhat, vel) * math.sin(ang)
               + rhat * np.dot(rhat, vel) * (1.0 - math.cos(ang)))
    s = (pos[0] + miss_km * rhat[0], pos[1] + miss_km * rhat[1],
         pos[2] + miss_km * rhat[2], vel_rot[0], vel_rot[1], vel_rot[2], 100.0)
    # back-propagate the coasting intruder to t = 0
    dt = -cfg.dt_s
    n_back = int(round(t_at / cfg.dt_s))
    for _ in range(n_back):
        s = _rk4(s, dt, body.mu, 0.0, -1, 0.0, 0.0, 0.0, 0.0)
    return EciState(0.0, np.array(s[0:3]), np.array(s[3:6]), s[6])


def _with_max_duration(cfg: OrbitalConfig, max_s: float) -> OrbitalConfig:
    from dataclasses import replace
    return replace(cfg, max_duration_s=max_s)


def run_deorbit_with_avoidance(
    cfg: OrbitalConfig,
    policy: AvoidancePolicy,
    intruder0: EciState | None,
    intruder_name: str = "intruder",
) -> AvoidanceResult:
    """Deorbit mission with the local avoidance layer in the loop.

    With no intruder the flown trajectory is step-for-step identical to
    the plain deorbit run.
    """
    body = cfg.body
    tc = cfg.thrust_config()
    dt = cfg.dt_s
    re = body.earth_radius_km
    sun = body.sun_direction
    target_r = re + cfg.final_altitude_km
    mdot = cfg.thrust_n / (cfg.isp_s * body.g0)
    a_n = cfg.thrust_n / 1000.0
    offset_rad = math.radians(policy.thrust_offset_deg)
    oc, os_ = math.cos(offset_rad), math.sin(offset_rad)

    state0 = circular_state(cfg.initial_altitude_km, body, cfg.initial_mass_kg)
    s = _state_tuple(state0)
    si = _state_tuple(intruder0) if intruder0 is not None else None

    steps_per_sample = max(1, int(round(cfg.sample_interval_s / dt)))
    steps_per_check = max(1, int(round(policy.check_interval_s / dt)))
    t = 0.0
    samples = [(t,) + s]
    eclipse_flags = [_ecl(s, sun, re)]
    events: list[AvoidanceEvent] = []
    plan: EvasionPlan | None = None
    conj: Conjunction | None = None
    burn_end = -1.0
    handled = False
    detected = False
    termination = "max-duration"
    step_i = 0

    while t < cfg.max_duration_s:
        if t < burn_end:
            s = _rk4(s, dt, body.mu, a_n, 3, oc, os_, 0.0, mdot)
            resumed = t + dt >= burn_end
        else:
            s, _ = _core_step(s, tc, body, dt)
            resumed = False
        if si is not None:
            si = _rk4(si, dt, body.mu, 0.0, -1, 0.0, 0.0, 0.0, 0.0)
        t += dt
        step_i += 1
        if resumed:
            events.append(AvoidanceEvent(t, "resume", intruder_name,
                                         plan.predicted_miss_km, "retrograde thrust restored"))
        if step_i % steps_per_sample == 0:
            samples.append((t,) + s)
            eclipse_flags.append(_ecl(s, sun, re))
        rn = math.sqrt(s[0] ** 2 + s[1] ** 2 + s[2] ** 2)
        if rn <= target_r:
            termination = "target-altitude"
            break
        if s[6] <= tc.mass_floor_kg + 1e-12:
            termination = "propellant-exhausted"
            break
        if (si is not None and not handled and t >= burn_end
                and step_i % steps_per_check == 0):
            sep = math.dist(s[0:3], si[0:3])
            if sep <= policy.detection_range_km:
                if not detected:
                    detected = True
                    events.append(AvoidanceEvent(t, "detect", intruder_name, sep,
                                                 "intruder inside detection range"))
                found = _predict_conjunction(s, si, t, policy, body, a_n, mdot,
                                             intruder_name)
                if found is not None:
                    conj = found
                    own_state = EciState(t, np.array(s[0:3]), np.array(s[3:6]), s[6])
                    intr_state = EciState(t, np.array(si[0:3]), np.array(si[3:6]), si[6])
                    plan = plan_evasion(own_state, conj, policy, cfg, intr_state)
                    if not plan.empty:
                        burn_end = t + plan.duration_s
                        handled = True
                        events.append(AvoidanceEvent(
                            t, "interrupt", intruder_name, conj.miss_km,
                            f"thrust offset {plan.offset_deg:.0f} deg for {plan.duration_s:.0f} s"))

    if samples[-1][0] != t:
        samples.append((t,) + s)
        eclipse_flags.append(_ecl(s, sun, re))

    arr = np.array(samples)
    pos = arr[:, 1:4]
    alt = np.linalg.norm(pos, axis=1) - re
    from .dynamics import _per_orbit_means, _swept_orbits
    deorbit = DeorbitResult(
        t_s=arr[:, 0], position_km=pos, velocity_kms=arr[:, 4:7],
        mass_kg=arr[:, 7], altitude_km=alt,
        eclipse=np.array(eclipse_flags, dtype=bool),
        duration_s=t, propellant_used_kg=cfg.initial_mass_kg - s[6],
        orbit_count=_swept_orbits(pos),
        complete=termination == "target-altitude", termination=termination,
        per_orbit_mean_altitude_km=_per_orbit_means(arr[:, 0], pos, alt),
    )
    verified = None
    if intruder0 is not None:
        verified = _verify_miss(deorbit, intruder0, body)
        events.append(AvoidanceEvent(t, "clear", intruder_name, verified,
                                     "re-simulated closest approach"))
    return AvoidanceResult(deorbit=deorbit, events=events, plan=plan,
                           conjunction=conj, verified_miss_km=verified)


def _core_step(s, tc: ThrustConfig, body, dt):
    from .dynamics import _step_core
    return _step_core(s, tc, body, dt, True)


def _ecl(s, sun, re):
    from .dynamics import _eclipse_fast
    return _eclipse_fast(s, sun, re)


def _predict_conjunction(s, si, t, policy: AvoidancePolicy, body, a_n, mdot,
                         name) -> Conjunction | None:
    dt = policy.prediction_dt_s
    n_steps = int(policy.detection_horizon_s / dt)
    own = np.empty((n_steps + 1, 3))
    own[0] = s[0:3]
    sp = s
    for i in range(1, n_steps + 1):
        sp = _rk4(sp, dt, body.mu, a_n, 0, 0.0, 0.0, 0.0, mdot)
        own[i] = sp[0:3]
    _, other = _coast(si, dt, n_steps, body)
    grid = t + np.arange(n_steps + 1) * dt
    return detect_conjunction(grid, own, grid, other, policy, intruder=name)


def _verify_miss(deorbit: DeorbitResult, intruder0: EciState, body) -> float:
    """Closest approach of the flown trajectory to the coasting intruder.

    Independent of the planner: replays the intruder over the mission,
    compares against the recorded samples and refines the discrete
    minimum with the same quadratic interpolation the detector uses.
    """
    t_grid = deorbit.t_s
    si = _state_tuple(intruder0)
    dt = 10.0
    t = 0.0
    dists = np.empty(len(t_grid))
    for k in range(len(t_grid)):
        while t < t_grid[k] - 1e-9:
            si = _rk4(si, dt, body.mu, 0.0, -1, 0.0, 0.0, 0.0, 0.0)
            t += dt
        dists[k] = math.dist(tuple(deorbit.position_km[k]), si[0:3])
    k = int(np.argmin(dists))
    best = float(dists[k])
    if 0 < k < len(dists) - 1:
        y0, y1, y2 = dists[k - 1] ** 2, dists[k] ** 2, dists[k + 1] ** 2
        denom = y0 - 2.0 * y1 + y2
        if denom > 0:
            delta = max(-1.0, min(1.0, 0.5 * (y0 - y2) / denom))
            best = math.sqrt(max(y1 - 0.25 * (y0 - y2) * delta, 0.0))
    return best
