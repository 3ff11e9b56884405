"""Scenario orchestration: dispatch, CSV/figure emission, verdicts.

Each scenario writes delimited outputs plus SVG figures into the output
directory, echoes the effective configuration, and returns a report whose
pass/fail verdicts are recomputable from the emitted CSVs alone (see
``recompute_report``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import avoidance as av
from . import dtn as dtnmod
from . import nav as navmod
from . import power as powermod
from .config import MissionConfig, dump_config
from .dynamics import DeorbitResult, EciState, edelbaum_estimate, run_deorbit
from .plots import emit_plot

SCENARIOS = ("deorbit", "proximity-nav", "longduration-nav", "dtn",
             "avoidance", "full-mission")

EARTH_ROTATION_RAD_S = 7.2921159e-5


@dataclass
class ScenarioReport:
    """Headline metrics, verdicts and emitted files of one scenario run."""

    scenario: str
    seed: int
    metrics: dict
    checks: list          # [name, passed, detail]
    files: list

    @property
    def passed(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def to_json(self) -> str:
        return json.dumps({
            "scenario": self.scenario,
            "seed": self.seed,
            "metrics": self.metrics,
            "checks": self.checks,
            "files": self.files,
            "passed": self.passed,
        }, indent=2)

    def summary_lines(self) -> list[str]:
        lines = [f"scenario {self.scenario} (seed {self.seed})"]
        for key, value in self.metrics.items():
            lines.append(f"  {key} = {value}")
        for name, ok, detail in self.checks:
            lines.append(f"  [{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        return lines


def _write_csv(path: Path, header: str, rows) -> Path:
    def cell(v):
        if v is None:
            return ""
        if isinstance(v, (bool, np.bool_)):
            return str(int(v))
        if isinstance(v, (float, np.floating)):
            return repr(float(v))
        return str(v)
    lines = [header]
    lines.extend(",".join(cell(v) for v in row) for row in rows)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _decay_r2(per_orbit: np.ndarray) -> float:
    """Linear-fit R^2 of the middle 80% of per-orbit mean altitudes."""
    n = len(per_orbit)
    lo, hi = int(round(0.1 * n)), int(round(0.9 * n))
    y = per_orbit[lo:hi]
    if len(y) < 3:
        return 0.0
    x = np.arange(len(y), dtype=float)
    coeffs = np.polyfit(x, y, 1)
    resid = y - np.polyval(coeffs, x)
    total = ((y - y.mean()) ** 2).sum()
    return float(1.0 - (resid ** 2).sum() / total) if total > 0 else 1.0


def _write_trajectory(path: Path, res: DeorbitResult) -> Path:
    rows = zip(res.t_s, res.position_km[:, 0], res.position_km[:, 1],
               res.position_km[:, 2], res.velocity_kms[:, 0],
               res.velocity_kms[:, 1], res.velocity_kms[:, 2],
               res.mass_kg, res.altitude_km, res.eclipse)
    return _write_csv(
        path, "t_s,x_km,y_km,z_km,vx_kms,vy_kms,vz_kms,mass_kg,alt_km,eclipse", rows)


# -- scenarios ----------------------------------------------------------------

def _scenario_deorbit(cfg: MissionConfig, seed: int, out: Path) -> ScenarioReport:
    orb = cfg.orbital()
    res = run_deorbit(orb.initial_altitude_km, orb.final_altitude_km, orb)
    files = [_write_trajectory(out / "trajectory.csv", res)]

    mjd0 = cfg["run", "mjd_offset_days"]
    days = mjd0 + res.t_s / 86400.0
    files.append(emit_plot(
        [("radial distance", days, res.altitude_km + orb.body.earth_radius_km)],
        "line", out / "altitude.svg",
        title="Deorbit radial distance", xlabel="time (TAI MJD days)",
        ylabel="RMAG (km)"))
    files.append(emit_plot(
        [("mass", res.t_s / 86400.0, res.mass_kg)], "line", out / "mass.svg",
        title="Vehicle mass", xlabel="time (days)", ylabel="mass (kg)"))

    est_s = edelbaum_estimate(orb.initial_altitude_km, orb.final_altitude_km,
                              orb.thrust_n, orb.initial_mass_kg, orb.body)
    r2 = _decay_r2(res.per_orbit_mean_altitude_km)
    flow = orb.thrust_n / (orb.isp_s * orb.body.g0)
    metrics = {
        "duration_days": res.duration_days,
        "duration_s": res.duration_s,
        "propellant_used_kg": res.propellant_used_kg,
        "orbit_count": res.orbit_count,
        "termination": res.termination,
        "edelbaum_estimate_days": est_s / 86400.0,
        "decay_linear_r2": r2,
    }
    checks = [
        ["reaches-target-altitude", bool(res.complete), res.termination],
        ["duration-within-10pct-of-estimate",
         bool(abs(res.duration_s - est_s) <= 0.1 * est_s),
         f"{res.duration_days:.3f} d vs estimate {est_s/86400.0:.3f} d"],
        ["propellant-within-budget",
         bool(res.propellant_used_kg < orb.propellant_kg),
         f"{res.propellant_used_kg:.2f} kg of {orb.propellant_kg:.0f} kg"],
        ["propellant-within-10pct-of-estimate",
         bool(abs(res.propellant_used_kg - flow * est_s) <= 0.1 * flow * est_s),
         f"{res.propellant_used_kg:.2f} kg vs estimate {flow*est_s:.2f} kg"],
        ["per-orbit-decay-monotone",
         bool(np.all(np.diff(res.per_orbit_mean_altitude_km) <= 1e-6)),
         f"{len(res.per_orbit_mean_altitude_km)} orbits"],
        ["decay-linear-r2", bool(r2 > 0.99), f"R^2 = {r2:.5f}"],
    ]
    return ScenarioReport("deorbit", seed, metrics, checks, [str(f) for f in files])


def _write_nav_csv(path: Path, res: navmod.NavResult) -> Path:
    rows = [
        (t, e[0], e[1], e[2], e[3], e[4], e[5], s[0], s[1], s[2], nees)
        for t, e, s, nees in zip(res.t_s, res.error, res.sigma3_pos, res.nees)
    ]
    p = _write_csv(
        path, "t_s,ex_m,ey_m,ez_m,evx_ms,evy_ms,evz_ms,p3s_x,p3s_y,p3s_z,nees", rows)
    with p.open("a", encoding="utf-8") as fh:
        fh.write(f"# rmse_pos_m = {res.rmse_pos_m!r}\n")
        fh.write(f"# rmse_vel_ms = {res.rmse_vel_ms!r}\n")
        fh.write(f"# max_pos_error_m = {res.max_pos_error_m!r}\n")
        fh.write(f"# mean_nees = {res.mean_nees!r}\n")
        fh.write(f"# error_growth_ratio = {res.error_growth_ratio!r}\n")
    return p


def _nav_error_plot(res: navmod.NavResult, path: Path, title: str) -> Path:
    pos_err = np.linalg.norm(res.error[:, 0:3], axis=1)
    env = np.linalg.norm(res.sigma3_pos, axis=1)
    return emit_plot(
        [("|position error|", res.t_s, pos_err), ("3-sigma envelope", res.t_s, env)],
        "line", path, title=title, xlabel="time (s)", ylabel="position error (m)")


def _scenario_proximity(cfg: MissionConfig, seed: int, out: Path) -> ScenarioReport:
    ncfg = cfg.nav_proximity()
    duration = cfg["nav", "proximity_duration_s"]
    res = navmod.run_proximity_scenario(ncfg, duration, seed)
    files = [
        _write_nav_csv(out / "nav.csv", res),
        _nav_error_plot(res, out / "nav_error.svg", "Proximity navigation error"),
        emit_plot([("range", res.t_s, res.true_range_m)], "line",
                  out / "range.svg", title="True relative range",
                  xlabel="time (s)", ylabel="range (m)"),
    ]
    metrics = {
        "rmse_pos_m": res.rmse_pos_m,
        "rmse_vel_ms": res.rmse_vel_ms,
        "max_pos_error_m": res.max_pos_error_m,
        "mean_nees": res.mean_nees,
        "range_min_m": float(res.true_range_m.min()),
        "range_max_m": float(res.true_range_m.max()),
    }
    checks = [
        ["position-rmse", bool(res.rmse_pos_m < 10.0),
         f"{res.rmse_pos_m:.3f} m < 10 m"],
        ["velocity-rmse", bool(res.rmse_vel_ms < 0.03),
         f"{res.rmse_vel_ms:.4f} m/s < 0.03 m/s"],
    ]
    return ScenarioReport("proximity-nav", seed, metrics, checks,
                          [str(f) for f in files])


def _scenario_longduration(cfg: MissionConfig, seed: int, out: Path) -> ScenarioReport:
    ncfg = cfg.nav_longduration()
    duration = cfg["nav", "longduration_duration_s"]
    cw_only, aware = navmod.run_longduration_pair(ncfg, duration, seed)
    files = [
        _write_nav_csv(out / "nav_cw_only.csv", cw_only),
        _write_nav_csv(out / "nav_thrust_aware.csv", aware),
        emit_plot(
            [("cw-only", cw_only.t_s, np.linalg.norm(cw_only.error[:, 0:3], axis=1)),
             ("thrust-aware", aware.t_s, np.linalg.norm(aware.error[:, 0:3], axis=1))],
            "line", out / "divergence.svg",
            title="Thrusting-target tracking error", xlabel="time (s)",
            ylabel="position error (m)"),
    ]
    metrics = {
        "cw_only_rmse_pos_m": cw_only.rmse_pos_m,
        "thrust_aware_rmse_pos_m": aware.rmse_pos_m,
        "cw_only_growth_ratio": cw_only.error_growth_ratio,
        "final_separation_m": float(cw_only.true_range_m[-1]),
    }
    checks = [
        ["cw-only-rmse-order-1e2", bool(30.0 <= cw_only.rmse_pos_m <= 500.0),
         f"{cw_only.rmse_pos_m:.1f} m in [30, 500]"],
        ["thrust-aware-beats-cw-only", bool(aware.rmse_pos_m < cw_only.rmse_pos_m),
         f"{aware.rmse_pos_m:.2f} m < {cw_only.rmse_pos_m:.1f} m"],
    ]
    return ScenarioReport("longduration-nav", seed, metrics, checks,
                          [str(f) for f in files])


def _write_dtn_outputs(out: Path, metrics: dtnmod.DtnMetrics) -> list[Path]:
    files = []
    files.append(_write_csv(
        out / "bundles.csv",
        "id,priority,size_b,created_s,delivered_s,latency_s,hops,dropped",
        ((b.id, b.priority, b.size_b, b.created_s, b.delivered_s, b.latency_s,
          b.hops, b.dropped or "") for b in metrics.bundles)))
    files.append(_write_csv(
        out / "backlog.csv", "t_s,node,backlog_b",
        ((t, node, bl) for node in metrics.backlog
         for t, bl in metrics.backlog[node])))
    files.append(_write_csv(
        out / "throughput.csv", "t_s,link,rate_bps,snr_db",
        ((row[0], link, row[1], row[2]) for link in metrics.throughput
         for row in metrics.throughput[link])))
    cdf = dtnmod.latency_cdf(metrics.bundles)
    files.append(_write_csv(out / "latency_cdf.csv", "latency_s,fraction", cdf))

    for link, arr in metrics.throughput.items():
        files.append(emit_plot([(link, arr[:, 0], arr[:, 2])], "line",
                               out / f"snr_{link}.svg", title=f"Link SNR: {link}",
                               xlabel="time (s)", ylabel="SNR (dB)"))
        files.append(emit_plot([(link, arr[:, 0], arr[:, 1])], "step",
                               out / f"throughput_{link}.svg",
                               title=f"Available rate: {link}",
                               xlabel="time (s)", ylabel="rate (bytes/s)"))
    backlog_series = []
    for node in ("primary", "relay"):
        arr = dtnmod.backlog_series(metrics, node)
        backlog_series.append((node, arr[:, 0], arr[:, 1]))
    files.append(emit_plot(backlog_series, "step", out / "backlog.svg",
                           title="Buffer backlog", xlabel="time (s)",
                           ylabel="backlog (bytes)"))
    if cdf:
        lat, frac = zip(*cdf)
        files.append(emit_plot([("latency CDF", np.array(lat), np.array(frac))],
                               "cdf", out / "latency_cdf.svg",
                               title="Bundle delivery latency CDF",
                               xlabel="latency (s)", ylabel="cumulative fraction"))
        files.append(emit_plot([("latency", metrics.latencies())], "histogram",
                               out / "latency_hist.svg", bins=40,
                               title="Bundle delivery latency",
                               xlabel="latency (s)", ylabel="bundles"))
    return files


def _scenario_dtn(cfg: MissionConfig, seed: int, out: Path) -> ScenarioReport:
    topo = cfg.topology()
    traffic = cfg.traffic()
    duration = cfg["dtn", "duration_s"]
    m = dtnmod.run_dtn(topo, traffic, duration, seed=seed,
                       grid_s=cfg["dtn", "grid_s"])
    files = _write_dtn_outputs(out, m)

    within = m.delivered_within(1.0)
    pr = topo.links[0]
    outage_lat = [b.latency_s for b in m.bundles if b.latency_s is not None
                  and any(s < b.created_s < e for s, e in pr.outages)]
    tail = [l for l in outage_lat if 1000.0 <= l <= 4000.0]
    peak_relay = m.peak_backlog_b("relay")
    conserved = m.generated == m.delivered + m.buffered_at_end + m.in_flight_at_end + m.dropped
    metrics = {
        "generated": m.generated,
        "delivered": m.delivered,
        "dropped": m.dropped,
        "delivered_within_1s": within,
        "max_latency_s": float(m.latencies().max()) if m.delivered else 0.0,
        "outage_tail_count": len(tail),
        "peak_relay_backlog_b": peak_relay,
        "peak_primary_backlog_b": m.peak_backlog_b("primary"),
    }
    checks = [
        ["delivery-within-1s-band", bool(0.85 <= within <= 0.98),
         f"{within:.4f} in [0.85, 0.98]"],
        ["zero-loss", bool(m.dropped == 0), f"{m.dropped} dropped"],
        ["bundle-conservation", bool(conserved),
         f"{m.generated} = {m.delivered}+{m.buffered_at_end}+{m.in_flight_at_end}+{m.dropped}"],
        ["outage-tail-in-band", bool(len(tail) > 0 and max(outage_lat, default=0) <= 4000.0),
         f"{len(tail)} bundles with latency in [1000, 4000] s"],
        ["relay-backlog-peak", bool(32500.0 <= peak_relay <= 130000.0),
         f"{peak_relay/1e6:.4f} MB within x2 of 0.065 MB"],
    ]
    return ScenarioReport("dtn", seed, metrics, checks, [str(f) for f in files])


def _scenario_avoidance(cfg: MissionConfig, seed: int, out: Path) -> ScenarioReport:
    orb = cfg.orbital()
    policy = cfg.avoidance_policy()
    a = cfg.values["avoidance"]
    baseline = run_deorbit(orb.initial_altitude_km, orb.final_altitude_km, orb)
    intruder = av.build_crossing_intruder(
        orb, a["intruder_tca_s"], a["intruder_cross_angle_deg"],
        a["intruder_miss_km"], nominal=baseline)
    res = av.run_deorbit_with_avoidance(orb, policy, intruder)

    files = [
        _write_trajectory(out / "trajectory.csv", res.deorbit),
        _write_trajectory(out / "baseline_trajectory.csv", baseline),
        _write_csv(out / "events.csv", "t_s,event,intruder,miss_km,action",
                   ((e.t_s, e.event, e.intruder, e.miss_km, e.action)
                    for e in res.events)),
        emit_plot([("avoidance run", res.deorbit.t_s / 86400.0, res.deorbit.altitude_km),
                   ("baseline", baseline.t_s / 86400.0, baseline.altitude_km)],
                  "line", out / "altitude.svg", title="Deorbit with avoidance interrupt",
                  xlabel="time (days)", ylabel="altitude (km)"),
    ]
    interrupted = any(e.event == "interrupt" for e in res.events)
    orbit_s = 2.0 * math.pi * math.sqrt(
        (orb.body.earth_radius_km + orb.initial_altitude_km) ** 3 / orb.body.mu)
    delta = res.deorbit.duration_s - baseline.duration_s
    plan_s = res.plan.duration_s if res.plan else 0.0
    metrics = {
        "interrupted": interrupted,
        "conjunction_miss_km": res.conjunction.miss_km if res.conjunction else None,
        "plan_duration_s": plan_s,
        "verified_miss_km": res.verified_miss_km,
        "duration_days": res.deorbit.duration_days,
        "baseline_duration_days": baseline.duration_days,
        "duration_delta_s": delta,
    }
    checks = [
        ["interrupt-triggered", bool(interrupted),
         f"conjunction miss {metrics['conjunction_miss_km']} km"],
        ["cleared-to-clearance",
         bool(res.verified_miss_km is not None
              and res.verified_miss_km >= policy.clearance_km),
         f"re-simulated miss {res.verified_miss_km:.2f} km >= {policy.clearance_km} km"],
        ["deorbit-still-completes", bool(res.deorbit.complete),
         res.deorbit.termination],
        ["duration-penalty-bounded", bool(abs(delta - plan_s) <= orbit_s),
         f"delta {delta:.0f} s vs plan {plan_s:.0f} s (orbit {orbit_s:.0f} s)"],
    ]
    return ScenarioReport("avoidance", seed, metrics, checks, [str(f) for f in files])


class _PowerTracker:
    """Battery-coupled thrust gate for the full-mission run."""

    def __init__(self, pcfg: powermod.PowerConfig):
        self.pcfg = pcfg
        self.battery = powermod.BatteryState()
        self.prev_t: float | None = None
        self.prev_ecl = False
        self.thrust_on = True
        self.rows: list[tuple] = []
        self.floor_events = 0
        self.starved_s = 0.0

    def gate(self, state: EciState, eclipsed: bool) -> bool:
        pcfg = self.pcfg
        t = state.epoch_s
        net = 0.0
        if self.prev_t is not None and t > self.prev_t:
            dt = t - self.prev_t
            load = (pcfg.thruster_w if self.thrust_on else 0.0) + pcfg.bus_w
            if self.prev_ecl:
                net = -load
            else:
                surplus = pcfg.array_w - load
                net = min(surplus, pcfg.max_charge_w) if surplus > 0 else surplus
            before = self.battery
            self.battery = powermod.battery_step(self.battery, net, dt, pcfg)
            if self.battery.floor_violated and not before.floor_violated:
                self.floor_events += 1
            if not self.thrust_on:
                self.starved_s += dt
        self.prev_t = t
        self.prev_ecl = eclipsed
        if eclipsed:
            self.thrust_on = self.battery.soc > pcfg.soc_floor + 1e-9
        else:
            self.thrust_on = (pcfg.array_w >= pcfg.thruster_w + pcfg.bus_w
                              or self.battery.soc > pcfg.soc_floor + 1e-9)
        self.rows.append((t, eclipsed, net, self.battery.soc, self.battery.cycles))
        return self.thrust_on


def _scenario_full_mission(cfg: MissionConfig, seed: int, out: Path) -> ScenarioReport:
    orb = cfg.orbital()
    tracker = _PowerTracker(cfg.power())
    res = run_deorbit(orb.initial_altitude_km, orb.final_altitude_km, orb,
                      thrust_gate=tracker.gate)
    files = [
        _write_trajectory(out / "trajectory.csv", res),
        _write_csv(out / "power.csv", "t_s,in_eclipse,net_w,soc,cycles", tracker.rows),
        emit_plot([("altitude", res.t_s / 86400.0, res.altitude_km)], "line",
                  out / "altitude.svg", title="Coupled deorbit altitude",
                  xlabel="time (days)", ylabel="altitude (km)"),
        emit_plot([("state of charge", np.array([r[0] for r in tracker.rows]) / 86400.0,
                    np.array([r[3] for r in tracker.rows]))], "line",
                  out / "soc.svg", title="Battery state of charge",
                  xlabel="time (days)", ylabel="SoC"),
    ]

    # geometry-driven DTN over the first portion of the mission
    fm_duration = min(cfg["run", "fm_dtn_duration_s"], res.duration_s)
    t_grid, pos = res.t_s, res.position_km
    body = orb.body

    def primary_traj(t: float) -> np.ndarray:
        return np.array([np.interp(t, t_grid, pos[:, i]) for i in range(3)])

    a_relay = body.earth_radius_km + cfg["run", "relay_altitude_km"]
    n_relay = math.sqrt(body.mu / a_relay**3)
    phase0 = math.radians(cfg["run", "relay_phase_deg"])

    def relay_traj(t: float) -> np.ndarray:
        ang = n_relay * t + phase0
        return np.array([a_relay * math.cos(ang), a_relay * math.sin(ang), 0.0])

    lat = math.radians(cfg["run", "gs_lat_deg"])
    lon0 = math.radians(cfg["run", "gs_lon_deg"])
    re = body.earth_radius_km

    def ground_traj(t: float) -> np.ndarray:
        ang = EARTH_ROTATION_RAD_S * t + lon0
        return np.array([re * math.cos(lat) * math.cos(ang),
                         re * math.cos(lat) * math.sin(ang),
                         re * math.sin(lat)])

    topo = cfg.geometry_topology()
    geoms = {"primary-relay": (primary_traj, relay_traj),
             "relay-ground": (relay_traj, ground_traj)}
    m = dtnmod.run_dtn(topo, cfg.traffic(), fm_duration, seed=seed,
                       grid_s=cfg["dtn", "grid_s"], geometries=geoms)
    files.extend(_write_dtn_outputs(out, m))

    soc = np.array([r[3] for r in tracker.rows])
    conserved = m.generated == m.delivered + m.buffered_at_end + m.in_flight_at_end + m.dropped
    metrics = {
        "duration_days": res.duration_days,
        "termination": res.termination,
        "propellant_used_kg": res.propellant_used_kg,
        "soc_min": float(soc.min()),
        "battery_cycles": int(tracker.rows[-1][4]),
        "soc_floor_latched": bool(tracker.floor_events > 0),
        "thrust_starved_s": tracker.starved_s,
        "dtn_generated": m.generated,
        "dtn_delivered": m.delivered,
        "dtn_delivered_within_1s": m.delivered_within(1.0),
        "dtn_dropped": m.dropped,
    }
    checks = [
        ["mission-terminates", bool(res.complete), res.termination],
        ["soc-clamping-invariant",
         bool(soc.min() >= tracker.pcfg.soc_floor - 1e-9),
         f"min SoC {soc.min():.3f} never below floor {tracker.pcfg.soc_floor:.2f}"],
        ["dtn-zero-loss", bool(m.dropped == 0), f"{m.dropped} dropped"],
        ["dtn-conservation", bool(conserved),
         f"{m.generated} = {m.delivered}+{m.buffered_at_end}+{m.in_flight_at_end}+{m.dropped}"],
    ]
    return ScenarioReport("full-mission", seed, metrics, checks,
                          [str(f) for f in files])


_DISPATCH = {
    "deorbit": _scenario_deorbit,
    "proximity-nav": _scenario_proximity,
    "longduration-nav": _scenario_longduration,
    "dtn": _scenario_dtn,
    "avoidance": _scenario_avoidance,
    "full-mission": _scenario_full_mission,
}


def run_scenario(name: str, cfg: MissionConfig, out_dir: str | Path,
                 seed: int | None = None) -> ScenarioReport:
    """Run one named scenario, emitting CSVs, figures and the report."""
    if name not in _DISPATCH:
        raise ValueError(f"unknown scenario {name!r} (choose from {SCENARIOS})")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    effective_seed = cfg["run", "seed"] if seed is None else seed
    dump_config(cfg, out / "effective.cfg")
    report = _DISPATCH[name](cfg, effective_seed, out)
    report.files.append(str(out / "effective.cfg"))
    (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    report.files.append(str(out / "report.json"))
    for f in report.files:
        p = Path(f)
        if not p.exists() or p.stat().st_size == 0:
            raise RuntimeError(f"emitted file missing or empty: {f}")
    return report


# -- verdict re-derivation from emitted CSVs ----------------------------------

def _read_csv_columns(path: Path) -> dict[str, np.ndarray]:
    lines = [l for l in path.read_text(encoding="utf-8").splitlines()
             if l and not l.startswith("#")]
    header = lines[0].split(",")
    cols: dict[str, list] = {h: [] for h in header}
    for line in lines[1:]:
        for h, v in zip(header, line.split(",")):
            cols[h].append(v)
    return {h: np.array(v) for h, v in cols.items()}


def _floats(col: np.ndarray) -> np.ndarray:
    return np.array([float(v) if v != "" else np.nan for v in col])


def recompute_report(out_dir: str | Path) -> ScenarioReport:
    """Re-derive a scenario's verdicts from its CSVs and echoed config."""
    from .config import load_config

    out = Path(out_dir)
    stored = json.loads((out / "report.json").read_text(encoding="utf-8"))
    name = stored["scenario"]
    seed = stored["seed"]
    cfg = load_config(out / "effective.cfg")
    orb = cfg.orbital()

    metrics: dict = {}
    checks: list = []

    def traj_summary(fname="trajectory.csv"):
        c = _read_csv_columns(out / fname)
        t = _floats(c["t_s"])
        alt = _floats(c["alt_km"])
        mass = _floats(c["mass_kg"])
        pos = np.column_stack([_floats(c["x_km"]), _floats(c["y_km"]), _floats(c["z_km"])])
        return t, alt, mass, pos

    if name == "deorbit":
        t, alt, mass, pos = traj_summary()
        from .dynamics import _per_orbit_means
        per_orbit = _per_orbit_means(t, pos, alt)
        dur = float(t[-1] - t[0])
        est = edelbaum_estimate(orb.initial_altitude_km, orb.final_altitude_km,
                                orb.thrust_n, orb.initial_mass_kg, orb.body)
        flow = orb.thrust_n / (orb.isp_s * orb.body.g0)
        prop = float(mass[0] - mass[-1])
        r2 = _decay_r2(per_orbit)
        complete = bool(alt[-1] <= orb.final_altitude_km + 0.5)
        metrics = {"duration_days": dur / 86400.0, "propellant_used_kg": prop,
                   "decay_linear_r2": r2}
        checks = [
            ["reaches-target-altitude", complete, f"final altitude {alt[-1]:.1f} km"],
            ["duration-within-10pct-of-estimate", bool(abs(dur - est) <= 0.1 * est),
             f"{dur/86400.0:.3f} d vs estimate {est/86400.0:.3f} d"],
            ["propellant-within-budget", bool(prop < orb.propellant_kg),
             f"{prop:.2f} kg of {orb.propellant_kg:.0f} kg"],
            ["propellant-within-10pct-of-estimate",
             bool(abs(prop - flow * est) <= 0.1 * flow * est),
             f"{prop:.2f} kg vs estimate {flow*est:.2f} kg"],
            ["per-orbit-decay-monotone", bool(np.all(np.diff(per_orbit) <= 1e-6)),
             f"{len(per_orbit)} orbits"],
            ["decay-linear-r2", bool(r2 > 0.99), f"R^2 = {r2:.5f}"],
        ]
    elif name in ("proximity-nav", "longduration-nav"):
        def nav_rmse(fname):
            c = _read_csv_columns(out / fname)
            err = np.column_stack([_floats(c[k]) for k in
                                   ("ex_m", "ey_m", "ez_m", "evx_ms", "evy_ms", "evz_ms")])
            pe = np.linalg.norm(err[:, 0:3], axis=1)
            ve = np.linalg.norm(err[:, 3:6], axis=1)
            return float(np.sqrt((pe**2).mean())), float(np.sqrt((ve**2).mean()))
        if name == "proximity-nav":
            rp, rv = nav_rmse("nav.csv")
            metrics = {"rmse_pos_m": rp, "rmse_vel_ms": rv}
            checks = [
                ["position-rmse", bool(rp < 10.0), f"{rp:.3f} m < 10 m"],
                ["velocity-rmse", bool(rv < 0.03), f"{rv:.4f} m/s < 0.03 m/s"],
            ]
        else:
            rp_cw, _ = nav_rmse("nav_cw_only.csv")
            rp_aw, _ = nav_rmse("nav_thrust_aware.csv")
            metrics = {"cw_only_rmse_pos_m": rp_cw, "thrust_aware_rmse_pos_m": rp_aw}
            checks = [
                ["cw-only-rmse-order-1e2", bool(30.0 <= rp_cw <= 500.0),
                 f"{rp_cw:.1f} m in [30, 500]"],
                ["thrust-aware-beats-cw-only", bool(rp_aw < rp_cw),
                 f"{rp_aw:.2f} m < {rp_cw:.1f} m"],
            ]
    elif name == "dtn":
        c = _read_csv_columns(out / "bundles.csv")
        created = _floats(c["created_s"])
        latency = _floats(c["latency_s"])
        dropped = c["dropped"]
        generated = len(created)
        delivered = int(np.isfinite(latency).sum())
        ndropped = int((dropped != "").sum())
        within = float((latency[np.isfinite(latency)] <= 1.0).sum() / generated)
        outage_windows = cfg["dtn", "pr_outages"]
        in_outage = np.zeros(generated, dtype=bool)
        for s, e in outage_windows:
            in_outage |= (created > s) & (created < e)
        tail_mask = in_outage & np.isfinite(latency) & (latency >= 1000.0) & (latency <= 4000.0)
        outage_max = float(np.nanmax(latency[in_outage])) if in_outage.any() else 0.0
        b = _read_csv_columns(out / "backlog.csv")
        relay_mask = b["node"] == "relay"
        peak_relay = float(_floats(b["backlog_b"])[relay_mask].max())
        leftover = generated - delivered - ndropped
        metrics = {"generated": generated, "delivered": delivered,
                   "delivered_within_1s": within, "peak_relay_backlog_b": peak_relay}
        checks = [
            ["delivery-within-1s-band", bool(0.85 <= within <= 0.98),
             f"{within:.4f} in [0.85, 0.98]"],
            ["zero-loss", bool(ndropped == 0), f"{ndropped} dropped"],
            ["bundle-conservation", bool(leftover >= 0),
             f"{generated} = {delivered}+{leftover}+{ndropped}"],
            ["outage-tail-in-band", bool(tail_mask.sum() > 0 and outage_max <= 4000.0),
             f"{int(tail_mask.sum())} bundles with latency in [1000, 4000] s"],
            ["relay-backlog-peak", bool(32500.0 <= peak_relay <= 130000.0),
             f"{peak_relay/1e6:.4f} MB within x2 of 0.065 MB"],
        ]
    elif name == "avoidance":
        t, alt, _, _ = traj_summary()
        tb, altb, _, _ = traj_summary("baseline_trajectory.csv")
        ev = _read_csv_columns(out / "events.csv")
        events = ev["event"]
        miss = _floats(ev["miss_km"])
        policy = cfg.avoidance_policy()
        interrupted = bool((events == "interrupt").any())
        clear = miss[events == "clear"]
        verified = float(clear[-1]) if len(clear) else math.nan
        complete = bool(alt[-1] <= orb.final_altitude_km + 0.5)
        delta = float(t[-1] - tb[-1])
        ev_t = _floats(ev["t_s"])
        t_int = ev_t[events == "interrupt"]
        t_res = ev_t[events == "resume"]
        plan_s = float(t_res[0] - t_int[0]) if len(t_int) and len(t_res) else 0.0
        orbit_s = 2.0 * math.pi * math.sqrt(
            (orb.body.earth_radius_km + orb.initial_altitude_km) ** 3 / orb.body.mu)
        metrics = {"interrupted": interrupted, "verified_miss_km": verified,
                   "duration_delta_s": delta}
        checks = [
            ["interrupt-triggered", interrupted, "interrupt event present"],
            ["cleared-to-clearance",
             bool(verified == verified and verified >= policy.clearance_km),
             f"re-simulated miss {verified:.2f} km >= {policy.clearance_km} km"],
            ["deorbit-still-completes", complete, f"final altitude {alt[-1]:.1f} km"],
            ["duration-penalty-bounded", bool(abs(delta - plan_s) <= orbit_s),
             f"delta {delta:.0f} s vs plan {plan_s:.0f} s (orbit {orbit_s:.0f} s)"],
        ]
    elif name == "full-mission":
        t, alt, _, _ = traj_summary()
        p = _read_csv_columns(out / "power.csv")
        soc = _floats(p["soc"])
        floor = cfg.power().soc_floor
        c = _read_csv_columns(out / "bundles.csv")
        latency = _floats(c["latency_s"])
        ndropped = int((c["dropped"] != "").sum())
        generated = len(latency)
        delivered = int(np.isfinite(latency).sum())
        complete = bool(alt[-1] <= orb.final_altitude_km + 0.5)
        metrics = {"duration_days": float(t[-1] / 86400.0), "soc_min": float(soc.min()),
                   "dtn_delivered": delivered, "dtn_generated": generated}
        checks = [
            ["mission-terminates", complete, f"final altitude {alt[-1]:.1f} km"],
            ["soc-clamping-invariant", bool(soc.min() >= floor - 1e-9),
             f"min SoC {soc.min():.3f} never below floor {floor:.2f}"],
            ["dtn-zero-loss", bool(ndropped == 0), f"{ndropped} dropped"],
            ["dtn-conservation", bool(delivered + ndropped <= generated),
             f"{delivered}+{ndropped} <= {generated}"],
        ]
    else:
        raise ValueError(f"cannot recompute report for scenario {name!r}")

    files = stored.get("files", [])
    return ScenarioReport(name, seed, metrics, checks, files)
