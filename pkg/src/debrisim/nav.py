"""Truth-sensor-estimator chain for radar relative navigation.

Truth motion comes from differencing two nonlinear two-body propagations
in the chief's LVLH frame (x radial, y along-track, z cross-track,
meters / m/s). The filter is an EKF over the closed-form
Clohessy-Wiltshire transition, with an optional known-control term for
thrust-aware prediction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    BodyConstants,
    EciState,
    ThrustConfig,
    _state_tuple,
    _step_core,
    circular_state,
)


@dataclass(frozen=True)
class LvlhState:
    """Relative position (m) and velocity (m/s) in the chief's LVLH frame."""

    position_m: np.ndarray
    velocity_ms: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position_m", np.asarray(self.position_m, dtype=float))
        object.__setattr__(self, "velocity_ms", np.asarray(self.velocity_ms, dtype=float))
        if not (np.isfinite(self.position_m).all() and np.isfinite(self.velocity_ms).all()):
            raise ValueError("LvlhState components must be finite")

    def vector(self) -> np.ndarray:
        return np.concatenate([self.position_m, self.velocity_ms])


@dataclass
class EkfEstimate:
    """Six-state relative estimate with full covariance (SI units)."""

    state: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        self.state = np.asarray(self.state, dtype=float)
        self.covariance = np.asarray(self.covariance, dtype=float)


@dataclass(frozen=True)
class RadarMeasurement:
    range_m: float
    azimuth_rad: float
    elevation_rad: float
    timestamp_s: float

    def __post_init__(self):
        if self.range_m <= 0:
            raise ValueError("range must be positive")
        if abs(self.elevation_rad) > math.pi / 2 + 1e-12:
            raise ValueError("elevation out of [-pi/2, pi/2]")

    def vector(self) -> np.ndarray:
        return np.array([self.range_m, self.azimuth_rad, self.elevation_rad])


@dataclass(frozen=True)
class NavConfig:
    """Filter and truth settings for one relative-navigation scenario."""

    chief_altitude_km: float = 778.0
    sigma_range_m: float = 1.0
    sigma_angle_rad: float = 1.0e-3
    process_noise_q: float = 1.0e-6        # m^2/s^3
    filter_step_s: float = 1.0
    truth_dt_s: float = 0.1
    thrust_n: float = 0.0                  # deputy tangential thrust
    isp_s: float = 4150.0
    vehicle_mass_kg: float = 420.0
    initial_relative: tuple[float, ...] = (280.0, 760.0, 60.0, 0.0, -0.584, 0.0)
    init_sigma_pos_m: float = 10.0
    init_sigma_vel_ms: float = 0.1
    body: BodyConstants = field(default_factory=BodyConstants)

    def __post_init__(self):
        if min(self.sigma_range_m, self.sigma_angle_rad) <= 0:
            raise ValueError("measurement sigmas must be positive")
        if self.filter_step_s <= 0 or self.truth_dt_s <= 0:
            raise ValueError("steps must be positive")
        if self.process_noise_q < 0:
            raise ValueError("process noise must be non-negative")

    @property
    def mean_motion(self) -> float:
        a = self.body.earth_radius_km + self.chief_altitude_km
        return math.sqrt(self.body.mu / a**3)


# -- Clohessy-Wiltshire closed forms ----------------------------------------

def cw_transition(n: float, dt: float) -> np.ndarray:
    """Closed-form CW state transition matrix for mean motion n over dt."""
    if dt < 0:
        raise ValueError("cw_transition: dt must be non-negative")
    c, s = math.cos(n * dt), math.sin(n * dt)
    nt = n * dt
    phi = np.zeros((6, 6))
    phi[0, 0] = 4.0 - 3.0 * c
    phi[0, 3] = s / n
    phi[0, 4] = 2.0 * (1.0 - c) / n
    phi[1, 0] = 6.0 * (s - nt)
    phi[1, 1] = 1.0
    phi[1, 3] = 2.0 * (c - 1.0) / n
    phi[1, 4] = (4.0 * s - 3.0 * nt) / n
    phi[2, 2] = c
    phi[2, 5] = s / n
    phi[3, 0] = 3.0 * n * s
    phi[3, 3] = c
    phi[3, 4] = 2.0 * s
    phi[4, 0] = 6.0 * n * (c - 1.0)
    phi[4, 3] = -2.0 * s
    phi[4, 4] = 4.0 * c - 3.0
    phi[5, 2] = -n * s
    phi[5, 5] = c
    return phi


def cw_control_matrix(n: float, dt: float) -> np.ndarray:
    """Convolution of the CW transition with a constant acceleration.

    Returns the 6x3 matrix G such that a constant LVLH acceleration u over
    dt contributes G @ u to the propagated state.
    """
    c, s = math.cos(n * dt), math.sin(n * dt)
    n2 = n * n
    g = np.zeros((6, 3))
    g[0, 0] = (1.0 - c) / n2
    g[0, 1] = 2.0 * dt / n - 2.0 * s / n2
    g[1, 0] = 2.0 * s / n2 - 2.0 * dt / n
    g[1, 1] = 4.0 * (1.0 - c) / n2 - 1.5 * dt * dt
    g[2, 2] = (1.0 - c) / n2
    g[3, 0] = s / n
    g[3, 1] = 2.0 * (1.0 - c) / n
    g[4, 0] = -2.0 * (1.0 - c) / n
    g[4, 1] = 4.0 * s / n - 3.0 * dt
    g[5, 2] = s / n
    return g


def process_noise(q: float, dt: float) -> np.ndarray:
    """Discrete white-acceleration process noise for spectral density q."""
    qm = np.zeros((6, 6))
    p = q * dt**3 / 3.0
    pv = q * dt**2 / 2.0
    v = q * dt
    for i in range(3):
        qm[i, i] = p
        qm[i, i + 3] = pv
        qm[i + 3, i] = pv
        qm[i + 3, i + 3] = v
    return qm


# -- frames ------------------------------------------------------------------

def lvlh_axes(chief: EciState) -> tuple[np.ndarray, np.ndarray]:
    """LVLH rotation (rows = radial/along-track/cross-track in ECI) and the
    frame's angular velocity in ECI, rad/s."""
    r = chief.position_km
    v = chief.velocity_kms
    h = np.cross(r, v)
    x = r / np.linalg.norm(r)
    z = h / np.linalg.norm(h)
    y = np.cross(z, x)
    rot = np.vstack([x, y, z])
    omega = h / float(np.dot(r, r))
    return rot, omega


def eci_to_lvlh(chief: EciState, deputy: EciState) -> LvlhState:
    """Relative state of deputy in the chief's rotating LVLH frame, meters."""
    rot, omega = lvlh_axes(chief)
    dr = (deputy.position_km - chief.position_km) * 1000.0
    dv = (deputy.velocity_kms - chief.velocity_kms) * 1000.0
    rho = rot @ dr
    rho_dot = rot @ (dv - np.cross(omega, dr))
    return LvlhState(position_m=rho, velocity_ms=rho_dot)


def lvlh_to_eci(chief: EciState, rel: LvlhState, mass_kg: float) -> EciState:
    """Deputy inertial state from a relative LVLH state about the chief."""
    rot, omega = lvlh_axes(chief)
    dr = rot.T @ rel.position_m / 1000.0
    dv = rot.T @ rel.velocity_ms / 1000.0 + np.cross(omega, dr)
    return EciState(
        epoch_s=chief.epoch_s,
        position_km=chief.position_km + dr,
        velocity_kms=chief.velocity_kms + dv,
        mass_kg=mass_kg,
    )


def truth_propagate(
    chief: EciState,
    deputy: EciState,
    thrust: ThrustConfig,
    dt: float,
    constants: BodyConstants,
    truth_dt: float = 0.1,
) -> tuple[EciState, EciState, LvlhState]:
    """Propagate both vehicles dt seconds; deputy carries the thrust.

    Returns the new states and the deputy's relative LVLH state.
    """
    if dt <= 0:
        raise ValueError("truth_propagate: dt must be positive")
    coast = ThrustConfig(thrust_n=0.0, isp_s=thrust.isp_s, mode="off")
    sc = _state_tuple(chief)
    sd = _state_tuple(deputy)
    n_sub = max(1, int(round(dt / truth_dt)))
    h = dt / n_sub
    for _ in range(n_sub):
        sc, _ = _step_core(sc, coast, constants, h, True)
        sd, _ = _step_core(sd, thrust, constants, h, True)
    new_chief = EciState(chief.epoch_s + dt, np.array(sc[0:3]), np.array(sc[3:6]), sc[6])
    new_deputy = EciState(deputy.epoch_s + dt, np.array(sd[0:3]), np.array(sd[3:6]), sd[6])
    return new_chief, new_deputy, eci_to_lvlh(new_chief, new_deputy)


# -- measurement model --------------------------------------------------------

def measure_exact(state: np.ndarray) -> np.ndarray:
    """Noise-free radar observable (range, azimuth, elevation) of a 6-state."""
    x, y, z = state[0], state[1], state[2]
    rho = math.sqrt(x * x + y * y + z * z)
    if rho <= 0.0:
        raise ValueError("zero range")
    return np.array([rho, math.atan2(y, x), math.asin(z / rho)])


def radar_measure(rel: LvlhState, cfg: NavConfig, rng: np.random.Generator,
                  timestamp_s: float = 0.0) -> RadarMeasurement:
    """Range/azimuth/elevation observation with independent Gaussian noise."""
    h = measure_exact(rel.vector())
    noise = rng.normal(0.0, [cfg.sigma_range_m, cfg.sigma_angle_rad, cfg.sigma_angle_rad])
    rng_m = h[0] + noise[0]
    el = min(math.pi / 2, max(-math.pi / 2, h[2] + noise[2]))
    return RadarMeasurement(
        range_m=max(rng_m, 1e-6),
        azimuth_rad=h[1] + noise[1],
        elevation_rad=el,
        timestamp_s=timestamp_s,
    )


def measurement_jacobian(state: np.ndarray) -> np.ndarray:
    """Analytic 3x6 Jacobian of the radar observable at the given state."""
    x, y, z = state[0], state[1], state[2]
    rho2 = x * x + y * y + z * z
    rho = math.sqrt(rho2)
    if rho <= 0.0:
        raise ValueError("zero range")
    rxy2 = x * x + y * y
    rxy = math.sqrt(rxy2)
    jac = np.zeros((3, 6))
    jac[0, 0:3] = [x / rho, y / rho, z / rho]
    jac[1, 0] = -y / rxy2
    jac[1, 1] = x / rxy2
    jac[2, 0] = -z * x / (rho2 * rxy)
    jac[2, 1] = -z * y / (rho2 * rxy)
    jac[2, 2] = rxy / rho2
    return jac


# -- EKF ----------------------------------------------------------------------

def _require_spd(p: np.ndarray, what: str) -> None:
    if not np.allclose(p, p.T, rtol=1e-9, atol=1e-12):
        raise ValueError(f"{what}: covariance not symmetric")
    eig = np.linalg.eigvalsh(0.5 * (p + p.T))
    # tolerate roundoff-scale negatives relative to the largest eigenvalue
    floor = -1e-12 * max(float(eig.max()), 1e-300)
    if eig.min() <= floor:
        raise ValueError(f"{what}: covariance not positive definite (min eig {eig.min():.3e})")


def ekf_predict(est: EkfEstimate, cfg: NavConfig, control_accel=None,
                dt: float | None = None) -> EkfEstimate:
    """CW prediction step; ``control_accel`` is a known LVLH acceleration
    (m/s^2) held constant over the step, or None."""
    _require_spd(est.covariance, "ekf_predict")
    h = cfg.filter_step_s if dt is None else dt
    n = cfg.mean_motion
    phi = cw_transition(n, h)
    x = phi @ est.state
    if control_accel is not None:
        x = x + cw_control_matrix(n, h) @ np.asarray(control_accel, dtype=float)
    p = phi @ est.covariance @ phi.T + process_noise(cfg.process_noise_q, h)
    return EkfEstimate(state=x, covariance=0.5 * (p + p.T))


def ekf_update(est: EkfEstimate, meas: RadarMeasurement, cfg: NavConfig) -> EkfEstimate:
    """Joseph-form EKF measurement update."""
    _require_spd(est.covariance, "ekf_update")
    hjac = measurement_jacobian(est.state)
    r = np.diag([cfg.sigma_range_m**2, cfg.sigma_angle_rad**2, cfg.sigma_angle_rad**2])
    p = est.covariance
    s = hjac @ p @ hjac.T + r
    innov = meas.vector() - measure_exact(est.state)
    innov[1] = (innov[1] + math.pi) % (2.0 * math.pi) - math.pi
    try:
        gain = np.linalg.solve(s.T, (p @ hjac.T).T).T
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError(
            f"singular innovation covariance (diag {np.diag(s)})") from exc
    x = est.state + gain @ innov
    ikh = np.eye(6) - gain @ hjac
    pnew = ikh @ p @ ikh.T + gain @ r @ gain.T
    return EkfEstimate(state=x, covariance=0.5 * (pnew + pnew.T))


# -- scenarios ----------------------------------------------------------------

@dataclass
class NavResult:
    """Error time series and summary statistics of one filter run."""

    t_s: np.ndarray
    error: np.ndarray            # (N, 6) estimate minus truth
    sigma3_pos: np.ndarray       # (N, 3) 3-sigma position envelope
    nees: np.ndarray
    rmse_pos_m: float
    rmse_vel_ms: float
    max_pos_error_m: float
    error_growth_ratio: float
    true_range_m: np.ndarray

    @property
    def mean_nees(self) -> float:
        return float(self.nees.mean())


def _simulate_truth(cfg: NavConfig, duration_s: float, thrust_n: float,
                    noise_rng: np.random.Generator | None = None):
    """Chief/deputy truth states sampled at the filter step.

    When ``noise_rng`` is given, the deputy receives per-step random
    disturbances realizing the configured process-noise density, so the
    truth statistics match the filter's assumed model (the usual Monte
    Carlo consistency setup).
    """
    body = cfg.body
    chief = circular_state(cfg.chief_altitude_km, body, cfg.vehicle_mass_kg)
    rel0 = LvlhState(np.array(cfg.initial_relative[0:3]),
                     np.array(cfg.initial_relative[3:6]))
    deputy = lvlh_to_eci(chief, rel0, cfg.vehicle_mass_kg)
    mode = "prograde" if thrust_n > 0.0 else "off"
    thrust = ThrustConfig(thrust_n=max(thrust_n, 0.0), isp_s=cfg.isp_s, mode=mode)
    steps = int(round(duration_s / cfg.filter_step_s))
    chol = None
    if noise_rng is not None and cfg.process_noise_q > 0.0:
        chol = np.linalg.cholesky(process_noise(cfg.process_noise_q, cfg.filter_step_s)
                                  + 1e-30 * np.eye(6))
    rel_states = np.empty((steps + 1, 6))
    rel_states[0] = rel0.vector()
    for k in range(1, steps + 1):
        chief, deputy, rel = truth_propagate(
            chief, deputy, thrust, cfg.filter_step_s, body, cfg.truth_dt_s)
        if chol is not None:
            perturbed = LvlhState(*np.split(
                rel.vector() + chol @ noise_rng.standard_normal(6), 2))
            deputy = lvlh_to_eci(chief, perturbed, deputy.mass_kg)
            rel = perturbed
        rel_states[k] = rel.vector()
    t = np.arange(steps + 1) * cfg.filter_step_s
    return t, rel_states


def _run_filter(cfg: NavConfig, t: np.ndarray, truth: np.ndarray,
                rng: np.random.Generator, control_accel=None) -> NavResult:
    init_sig = np.array([cfg.init_sigma_pos_m] * 3 + [cfg.init_sigma_vel_ms] * 3)
    est = EkfEstimate(
        state=truth[0] + rng.normal(0.0, init_sig),
        covariance=np.diag(init_sig**2),
    )
    n_steps = len(t) - 1
    err = np.empty((n_steps, 6))
    sig3 = np.empty((n_steps, 3))
    nees = np.empty(n_steps)
    rng_true = np.empty(n_steps)
    for k in range(1, n_steps + 1):
        est = ekf_predict(est, cfg, control_accel)
        rel = LvlhState(truth[k, 0:3], truth[k, 3:6])
        meas = radar_measure(rel, cfg, rng, timestamp_s=float(t[k]))
        est = ekf_update(est, meas, cfg)
        e = est.state - truth[k]
        err[k - 1] = e
        sig3[k - 1] = 3.0 * np.sqrt(np.diag(est.covariance)[0:3])
        nees[k - 1] = float(e @ np.linalg.solve(est.covariance, e))
        rng_true[k - 1] = float(np.linalg.norm(truth[k, 0:3]))
    pos_err = np.linalg.norm(err[:, 0:3], axis=1)
    vel_err = np.linalg.norm(err[:, 3:6], axis=1)
    head = max(1, n_steps // 10)
    growth = float(np.sqrt((pos_err[-head:] ** 2).mean())
                   / max(np.sqrt((pos_err[:head] ** 2).mean()), 1e-12))
    return NavResult(
        t_s=t[1:],
        error=err,
        sigma3_pos=sig3,
        nees=nees,
        rmse_pos_m=float(np.sqrt((pos_err**2).mean())),
        rmse_vel_ms=float(np.sqrt((vel_err**2).mean())),
        max_pos_error_m=float(pos_err.max()),
        error_growth_ratio=growth,
        true_range_m=rng_true,
    )


def _rng_pair(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent (truth-disturbance, filter/measurement) streams per seed."""
    truth_ss, filt_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(truth_ss), np.random.default_rng(filt_ss)


def run_proximity_scenario(cfg: NavConfig, duration_s: float, seed: int) -> NavResult:
    """Station-keeping estimation run: coasting truth, radar EKF."""
    truth_rng, filt_rng = _rng_pair(seed)
    t, truth = _simulate_truth(cfg, duration_s, thrust_n=0.0, noise_rng=truth_rng)
    return _run_filter(cfg, t, truth, filt_rng)


def run_longduration_pair(cfg: NavConfig, duration_s: float, seed: int
                          ) -> tuple[NavResult, NavResult]:
    """(cw-only, thrust-aware) filter results on one shared thrusting truth.

    Both filters see identical measurements, so per-seed comparisons are
    paired.
    """
    truth_rng, _ = _rng_pair(seed)
    t, truth = _simulate_truth(cfg, duration_s, thrust_n=cfg.thrust_n,
                               noise_rng=truth_rng)
    accel = np.array([0.0, cfg.thrust_n / cfg.vehicle_mass_kg, 0.0])
    _, rng_a = _rng_pair(seed)
    cw_only = _run_filter(cfg, t, truth, rng_a)
    _, rng_b = _rng_pair(seed)
    aware = _run_filter(cfg, t, truth, rng_b,
                        control_accel=accel if cfg.thrust_n > 0.0 else None)
    return cw_only, aware


def run_longduration_scenario(cfg: NavConfig, duration_s: float, seed: int,
                              variant: str = "cw-only") -> NavResult:
    """Thrusting-truth run with the chosen prediction variant."""
    if variant not in ("cw-only", "thrust-aware"):
        raise ValueError(f"unknown variant {variant!r}")
    cw_only, aware = run_longduration_pair(cfg, duration_s, seed)
    return cw_only if variant == "cw-only" else aware
