"""Earth-centered two-body propagation under continuous low thrust.

Units: positions km, velocities km/s, mass kg, time s, thrust N,
specific impulse s. Thrust acceleration is converted to km/s^2
internally. The propagator is a fixed-step RK4 over the 7-state
(position, velocity, mass) system; fixed stepping keeps runs
bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MU_EARTH = 398600.4418      # km^3/s^2
R_EARTH = 6378.137          # km
G0 = 9.80665                # m/s^2

THRUST_MODES = ("retrograde", "prograde", "inertial-fixed", "off")


@dataclass(frozen=True)
class BodyConstants:
    """Central-body constants plus the scenario's fixed sun direction."""

    mu: float = MU_EARTH
    earth_radius_km: float = R_EARTH
    g0: float = G0
    sun_direction: tuple[float, float, float] = (1.0, 0.0, 0.0)

    def __post_init__(self):
        if self.mu <= 0 or self.earth_radius_km <= 0 or self.g0 <= 0:
            raise ValueError("mu, earth_radius_km and g0 must be positive")
        s = math.sqrt(sum(c * c for c in self.sun_direction))
        if abs(s - 1.0) > 1e-9:
            raise ValueError(f"sun_direction must be a unit vector (norm {s:.6g})")


@dataclass(frozen=True)
class ThrustConfig:
    """Thruster magnitude, efficiency and pointing mode.

    ``mass_floor_kg`` is the vehicle mass with the propellant tank empty;
    thrust is truncated once the propagated mass reaches it.
    ``direction`` is only used by the ``inertial-fixed`` mode.
    """

    thrust_n: float
    isp_s: float
    mode: str = "retrograde"
    mass_floor_kg: float = 0.0
    direction: tuple[float, float, float] = (1.0, 0.0, 0.0)

    def __post_init__(self):
        if self.thrust_n < 0:
            raise ValueError("thrust must be non-negative")
        if self.isp_s <= 0:
            raise ValueError("specific impulse must be positive")
        if self.mode not in THRUST_MODES:
            raise ValueError(f"unknown thrust mode {self.mode!r}")


@dataclass(frozen=True)
class EciState:
    """Inertial position/velocity/mass of one vehicle at a scenario epoch."""

    epoch_s: float
    position_km: np.ndarray
    velocity_kms: np.ndarray
    mass_kg: float

    def __post_init__(self):
        object.__setattr__(self, "position_km", np.asarray(self.position_km, dtype=float))
        object.__setattr__(self, "velocity_kms", np.asarray(self.velocity_kms, dtype=float))

    @property
    def radius_km(self) -> float:
        return float(np.linalg.norm(self.position_km))

    def altitude_km(self, constants: BodyConstants) -> float:
        return self.radius_km - constants.earth_radius_km


@dataclass(frozen=True)
class DragConfig:
    """Optional cannonball drag hook, disabled by default.

    Exponential atmosphere rho = rho0 * exp(-(alt - h0)/H); acceleration
    -0.5 * rho * (Cd A / m) * |v| v.
    """

    cd_area_over_mass_m2_kg: float = 0.0
    rho0_kg_m3: float = 1e-11
    h0_km: float = 400.0
    scale_height_km: float = 60.0

    @property
    def enabled(self) -> bool:
        return self.cd_area_over_mass_m2_kg > 0.0


def two_body_accel(position_km: np.ndarray, constants: BodyConstants) -> np.ndarray:
    """Point-mass gravity -mu * r / |r|^3 in km/s^2."""
    r = np.asarray(position_km, dtype=float)
    rn = float(np.linalg.norm(r))
    if rn <= 0.0:
        raise ValueError("two_body_accel: zero-norm position")
    return (-constants.mu / rn**3) * r


def thrust_accel(state: EciState, cfg: ThrustConfig, enabled: bool = True) -> np.ndarray:
    """Thrust acceleration in km/s^2 for the configured pointing mode."""
    if not enabled or cfg.mode == "off" or cfg.thrust_n == 0.0:
        return np.zeros(3)
    if state.mass_kg <= 0:
        raise ValueError("thrust_accel: non-positive mass")
    a_mag = cfg.thrust_n / state.mass_kg / 1000.0  # km/s^2
    if cfg.mode == "inertial-fixed":
        d = np.asarray(cfg.direction, dtype=float)
        return a_mag * d / np.linalg.norm(d)
    v = state.velocity_kms
    vn = float(np.linalg.norm(v))
    if vn == 0.0:
        raise ValueError(f"thrust_accel: zero velocity with {cfg.mode} mode")
    sign = -1.0 if cfg.mode == "retrograde" else 1.0
    return (sign * a_mag / vn) * v


def mass_flow_rate(cfg: ThrustConfig, constants: BodyConstants) -> float:
    """Propellant flow T / (Isp * g0) in kg/s."""
    return cfg.thrust_n / (cfg.isp_s * constants.g0)


def in_eclipse(state: EciState, constants: BodyConstants) -> bool:
    """Cylindrical Earth-shadow test against the scenario sun direction."""
    r = state.position_km
    s = np.asarray(constants.sun_direction, dtype=float)
    d = float(np.dot(r, s))
    if d >= 0.0:
        return False
    perp = r - d * s
    return float(np.linalg.norm(perp)) < constants.earth_radius_km


def specific_energy(state: EciState, constants: BodyConstants) -> float:
    """Specific orbital energy |v|^2/2 - mu/|r| in km^2/s^2."""
    v2 = float(np.dot(state.velocity_kms, state.velocity_kms))
    return 0.5 * v2 - constants.mu / state.radius_km


def circular_state(
    altitude_km: float,
    constants: BodyConstants,
    mass_kg: float,
    phase_rad: float = 0.0,
    inclination_rad: float = 0.0,
    epoch_s: float = 0.0,
) -> EciState:
    """Circular-orbit state at the given altitude and in-plane phase.

    The orbit plane is the equatorial plane rotated about the x axis by
    ``inclination_rad``; phase 0 starts on the +x axis.
    """
    r = constants.earth_radius_km + altitude_km
    v = math.sqrt(constants.mu / r)
    cp, sp = math.cos(phase_rad), math.sin(phase_rad)
    ci, si = math.cos(inclination_rad), math.sin(inclination_rad)
    pos = np.array([r * cp, r * sp * ci, r * sp * si])
    vel = np.array([-v * sp, v * cp * ci, v * cp * si])
    return EciState(epoch_s=epoch_s, position_km=pos, velocity_kms=vel, mass_kg=mass_kg)


# -- fast float core -------------------------------------------------------
#
# The propagation loops below run hundreds of thousands of RK4 stages per
# scenario; plain float tuples are several times faster than small numpy
# arrays here.

def _rhs(s, mu, a_n_km, mode, dirx, diry, dirz, mdot, drag):
    x, y, z, vx, vy, vz, m = s
    r2 = x * x + y * y + z * z
    rn = math.sqrt(r2)
    k = -mu / (r2 * rn)
    ax, ay, az = k * x, k * y, k * z
    if a_n_km != 0.0:
        if mode == 2:  # inertial-fixed
            a = a_n_km / m
            ax += a * dirx
            ay += a * diry
            az += a * dirz
        else:
            vn = math.sqrt(vx * vx + vy * vy + vz * vz)
            a = a_n_km / (m * vn)
            if mode == 0:  # retrograde
                a = -a
            elif mode == 3:  # velocity-frame offset: dirx=cos, diry=sin
                hx = y * vz - z * vy
                hy = z * vx - x * vz
                hz = x * vy - y * vx
                hn = math.sqrt(hx * hx + hy * hy + hz * hz)
                am = a_n_km / m
                c, so = dirx, diry
                ax += am * (-c * vx / vn + so * hx / hn)
                ay += am * (-c * vy / vn + so * hy / hn)
                az += am * (-c * vz / vn + so * hz / hn)
                a = 0.0
            if a != 0.0:
                ax += a * vx
                ay += a * vy
                az += a * vz
    if drag is not None:
        rho0, h0, hs, bc, re = drag
        alt = rn - re
        rho = rho0 * math.exp(-(alt - h0) / hs)
        vn = math.sqrt(vx * vx + vy * vy + vz * vz)
        # bc in m^2/kg, rho in kg/m^3, v in km/s -> a in km/s^2
        ad = -0.5 * rho * bc * vn * 1000.0
        ax += ad * vx
        ay += ad * vy
        az += ad * vz
    return vx, vy, vz, ax, ay, az, -mdot


def _rk4(s, dt, mu, a_n_km, mode, dx, dy, dz, mdot, drag=None):
    k1 = _rhs(s, mu, a_n_km, mode, dx, dy, dz, mdot, drag)
    s2 = tuple(s[i] + 0.5 * dt * k1[i] for i in range(7))
    k2 = _rhs(s2, mu, a_n_km, mode, dx, dy, dz, mdot, drag)
    s3 = tuple(s[i] + 0.5 * dt * k2[i] for i in range(7))
    k3 = _rhs(s3, mu, a_n_km, mode, dx, dy, dz, mdot, drag)
    s4 = tuple(s[i] + dt * k3[i] for i in range(7))
    k4 = _rhs(s4, mu, a_n_km, mode, dx, dy, dz, mdot, drag)
    h = dt / 6.0
    return tuple(s[i] + h * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) for i in range(7))


_MODE_CODE = {"retrograde": 0, "prograde": 1, "inertial-fixed": 2, "off": -1}


def _state_tuple(state: EciState):
    p, v = state.position_km, state.velocity_kms
    return (p[0], p[1], p[2], v[0], v[1], v[2], state.mass_kg)


def _step_core(s, cfg: ThrustConfig, constants: BodyConstants, dt: float,
               enabled: bool, drag=None):
    """One RK4 step with propellant-floor truncation. Returns (state7, truncated)."""
    mode = _MODE_CODE[cfg.mode]
    thrusting = enabled and mode >= 0 and cfg.thrust_n > 0.0
    if not thrusting:
        return _rk4(s, dt, constants.mu, 0.0, -1, 0.0, 0.0, 0.0, 0.0, drag), False
    mdot = mass_flow_rate(cfg, constants)
    a_n_km = cfg.thrust_n / 1000.0
    dx, dy, dz = cfg.direction
    if cfg.mode == "inertial-fixed":
        dn = math.sqrt(dx * dx + dy * dy + dz * dz)
        dx, dy, dz = dx / dn, dy / dn, dz / dn
    margin = s[6] - cfg.mass_floor_kg
    if margin <= 0.0:
        return _rk4(s, dt, constants.mu, 0.0, -1, 0.0, 0.0, 0.0, 0.0, drag), True
    burn = margin / mdot if mdot > 0.0 else dt
    if burn >= dt:
        return _rk4(s, dt, constants.mu, a_n_km, mode, dx, dy, dz, mdot, drag), False
    # floor reached mid-step: thrust for the remaining propellant, then coast
    s = _rk4(s, burn, constants.mu, a_n_km, mode, dx, dy, dz, mdot, drag)
    s = _rk4(s, dt - burn, constants.mu, 0.0, -1, 0.0, 0.0, 0.0, 0.0, drag)
    return s, True


def propagate_step(
    state: EciState,
    cfg: ThrustConfig,
    constants: BodyConstants,
    dt: float,
    enabled: bool = True,
) -> tuple[EciState, bool]:
    """Advance one fixed RK4 step of dt seconds.

    Returns the new state and a flag that is True when the propellant
    floor was reached during the step (thrust truncated to zero for the
    remainder).
    """
    if dt <= 0:
        raise ValueError("propagate_step: dt must be positive")
    s, truncated = _step_core(_state_tuple(state), cfg, constants, dt, enabled)
    new = EciState(
        epoch_s=state.epoch_s + dt,
        position_km=np.array(s[0:3]),
        velocity_kms=np.array(s[3:6]),
        mass_kg=s[6],
    )
    return new, truncated


def edelbaum_estimate(
    alt1_km: float,
    alt2_km: float,
    thrust_n: float,
    mass_kg: float,
    constants: BodyConstants,
) -> float:
    """Low-thrust circular-to-circular transfer time estimate in seconds.

    Delta-v is the difference of circular speeds; time assumes the full
    vehicle mass accelerated by the constant thrust.
    """
    if thrust_n <= 0:
        raise ValueError("edelbaum_estimate: thrust must be positive")
    r1 = constants.earth_radius_km + alt1_km
    r2 = constants.earth_radius_km + alt2_km
    dv_ms = abs(math.sqrt(constants.mu / r1) - math.sqrt(constants.mu / r2)) * 1000.0
    return dv_ms * mass_kg / thrust_n


@dataclass(frozen=True)
class OrbitalConfig:
    """Deorbit-mission configuration (Table-style defaults).

    Initial mass is dry + propellant + payload; thrust truncates when the
    propellant is spent.
    """

    initial_altitude_km: float = 800.0
    final_altitude_km: float = 100.0
    thrust_n: float = 0.237
    isp_s: float = 4150.0
    dry_mass_kg: float = 300.0
    propellant_kg: float = 20.0
    payload_mass_kg: float = 100.0
    thrust_mode: str = "retrograde"
    dt_s: float = 10.0
    sample_interval_s: float = 60.0
    max_duration_s: float = 30.0 * 86400.0
    drag: DragConfig = field(default_factory=DragConfig)
    body: BodyConstants = field(default_factory=BodyConstants)

    @property
    def initial_mass_kg(self) -> float:
        return self.dry_mass_kg + self.propellant_kg + self.payload_mass_kg

    @property
    def mass_floor_kg(self) -> float:
        return self.dry_mass_kg + self.payload_mass_kg

    def thrust_config(self) -> ThrustConfig:
        return ThrustConfig(
            thrust_n=self.thrust_n,
            isp_s=self.isp_s,
            mode=self.thrust_mode,
            mass_floor_kg=self.mass_floor_kg,
        )

    def validate(self) -> None:
        if self.initial_altitude_km <= self.final_altitude_km:
            raise ValueError("initial altitude must exceed final altitude")
        if self.final_altitude_km <= 0:
            raise ValueError("final altitude must be positive")
        if self.dt_s <= 0 or self.sample_interval_s <= 0 or self.max_duration_s <= 0:
            raise ValueError("time steps must be positive")
        self.thrust_config()  # thrust/isp/mode invariants


@dataclass
class DeorbitResult:
    """Sampled trajectory plus deorbit summary."""

    t_s: np.ndarray
    position_km: np.ndarray       # (N, 3)
    velocity_kms: np.ndarray      # (N, 3)
    mass_kg: np.ndarray
    altitude_km: np.ndarray
    eclipse: np.ndarray           # bool
    duration_s: float
    propellant_used_kg: float
    orbit_count: float
    complete: bool
    termination: str              # target-altitude | propellant-exhausted | max-duration
    per_orbit_mean_altitude_km: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def duration_days(self) -> float:
        return self.duration_s / 86400.0


def _per_orbit_means(t: np.ndarray, pos: np.ndarray, alt: np.ndarray) -> np.ndarray:
    """Mean altitude per completed orbit, orbits counted by swept angle."""
    if len(t) < 3:
        return np.empty(0)
    u = pos / np.linalg.norm(pos, axis=1)[:, None]
    dots = np.clip(np.einsum("ij,ij->i", u[:-1], u[1:]), -1.0, 1.0)
    swept = np.concatenate([[0.0], np.cumsum(np.arccos(dots))])
    orbit_idx = np.floor(swept / (2.0 * math.pi)).astype(int)
    means = []
    for k in range(orbit_idx[-1] + 1):
        mask = orbit_idx == k
        if mask.any():
            means.append(float(alt[mask].mean()))
    return np.array(means)


def run_deorbit(
    initial_altitude_km: float,
    final_altitude_km: float,
    cfg: OrbitalConfig,
    thrust_gate=None,
    initial_state: EciState | None = None,
) -> DeorbitResult:
    """Propagate the spiral deorbit until the target altitude is reached.

    ``thrust_gate`` optionally decides per sample interval whether thrust
    may run (used for battery-coupled runs); it receives the current
    EciState and eclipse flag and returns a bool. ``initial_state``
    continues an interrupted mission instead of starting on the circular
    orbit at ``initial_altitude_km``.
    """
    if initial_altitude_km <= final_altitude_km or final_altitude_km <= 0:
        raise ValueError("run_deorbit: need initial > final > 0 altitude")
    if cfg.propellant_kg <= 0:
        raise ValueError("run_deorbit: propellant budget must be positive")
    body = cfg.body
    tc = cfg.thrust_config()
    drag = None
    if cfg.drag.enabled:
        drag = (cfg.drag.rho0_kg_m3, cfg.drag.h0_km, cfg.drag.scale_height_km,
                cfg.drag.cd_area_over_mass_m2_kg, body.earth_radius_km)

    state0 = initial_state if initial_state is not None else circular_state(
        initial_altitude_km, body, cfg.initial_mass_kg)
    s = _state_tuple(state0)
    dt = cfg.dt_s
    re = body.earth_radius_km
    target_r = re + final_altitude_km
    sun = body.sun_direction

    steps_per_sample = max(1, int(round(cfg.sample_interval_s / dt)))
    t_start = state0.epoch_s
    t = t_start
    samples = [(t,) + s]
    eclipse_flags = [_eclipse_fast(s, sun, re)]
    truncated_ever = False
    termination = "max-duration"
    enabled = True if thrust_gate is None else bool(
        thrust_gate(state0, eclipse_flags[0]))

    step_i = 0
    while t - t_start < cfg.max_duration_s:
        s, trunc = _step_core(s, tc, body, dt, enabled, drag)
        truncated_ever = truncated_ever or trunc
        t += dt
        step_i += 1
        rn = math.sqrt(s[0] * s[0] + s[1] * s[1] + s[2] * s[2])
        ecl = _eclipse_fast(s, sun, re)
        if step_i % steps_per_sample == 0:
            samples.append((t,) + s)
            eclipse_flags.append(ecl)
            if thrust_gate is not None:
                st = EciState(t, np.array(s[0:3]), np.array(s[3:6]), s[6])
                enabled = bool(thrust_gate(st, ecl))
        if rn <= target_r:
            termination = "target-altitude"
            break
        if truncated_ever and s[6] <= tc.mass_floor_kg + 1e-12:
            termination = "propellant-exhausted"
            break

    if samples[-1][0] != t:
        samples.append((t,) + s)
        eclipse_flags.append(_eclipse_fast(s, sun, re))

    arr = np.array(samples)
    pos = arr[:, 1:4]
    alt = np.linalg.norm(pos, axis=1) - re
    result = DeorbitResult(
        t_s=arr[:, 0],
        position_km=pos,
        velocity_kms=arr[:, 4:7],
        mass_kg=arr[:, 7],
        altitude_km=alt,
        eclipse=np.array(eclipse_flags, dtype=bool),
        duration_s=t - t_start,
        propellant_used_kg=state0.mass_kg - s[6],
        orbit_count=_swept_orbits(pos),
        complete=termination == "target-altitude",
        termination=termination,
        per_orbit_mean_altitude_km=_per_orbit_means(arr[:, 0], pos, alt),
    )
    return result


def _eclipse_fast(s, sun, re) -> bool:
    d = s[0] * sun[0] + s[1] * sun[1] + s[2] * sun[2]
    if d >= 0.0:
        return False
    px = s[0] - d * sun[0]
    py = s[1] - d * sun[1]
    pz = s[2] - d * sun[2]
    return px * px + py * py + pz * pz < re * re


def _swept_orbits(pos: np.ndarray) -> float:
    u = pos / np.linalg.norm(pos, axis=1)[:, None]
    dots = np.clip(np.einsum("ij,ij->i", u[:-1], u[1:]), -1.0, 1.0)
    return float(np.arccos(dots).sum() / (2.0 * math.pi))
