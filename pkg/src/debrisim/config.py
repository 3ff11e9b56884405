"""Mission configuration: sectioned key=value files and defaults.

Format: ``[section]`` headers, ``key = value`` lines, ``#`` comments,
UTF-8. Every key has a default mirroring the mission sizing table, so an
empty file is a valid full configuration. Unknown sections or keys and
invariant violations are rejected with the offending key and line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from .avoidance import AvoidancePolicy
from .dynamics import BodyConstants, DragConfig, OrbitalConfig
from .dtn import LinkModel, Topology, TrafficClass, TrafficModel
from .nav import NavConfig
from .power import PowerConfig


class ConfigError(ValueError):
    """Configuration file rejected; message names the key and line."""


# -- value parsers/formatters -------------------------------------------------

def _parse_float(raw: str) -> float:
    return float(raw)


def _parse_int(raw: str) -> int:
    return int(raw)


def _parse_str(raw: str) -> str:
    return raw


def _parse_capacity(raw: str) -> float:
    if raw.lower() in ("unlimited", "inf"):
        return math.inf
    return float(raw)


def _parse_floats(raw: str) -> tuple[float, ...]:
    return tuple(float(p) for p in raw.split(",") if p.strip() != "")


def _parse_windows(raw: str) -> tuple[tuple[float, float], ...]:
    if raw.lower() in ("none", ""):
        return ()
    out = []
    for part in raw.split(","):
        a, b = part.split(":")
        out.append((float(a), float(b)))
    return tuple(out)


def _parse_table(raw: str) -> tuple[tuple[float, float], ...]:
    out = []
    for part in raw.split(","):
        a, b = part.split(":")
        out.append((float(a), float(b)))
    return tuple(out)


def _fmt(value) -> str:
    if isinstance(value, float):
        if math.isinf(value):
            return "unlimited"
        return repr(value)
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return ",".join(f"{_fmt(a)}:{_fmt(b)}" for a, b in value)
        return ",".join(_fmt(v) for v in value)
    return str(value)


# -- schema -------------------------------------------------------------------
# section -> key -> (parser, default)

_SCHEMA: dict[str, dict[str, tuple]] = {
    "orbital": {
        "initial_altitude_km": (_parse_float, 800.0),
        "final_altitude_km": (_parse_float, 100.0),
        "thrust_n": (_parse_float, 0.237),
        "isp_s": (_parse_float, 4150.0),
        "dry_mass_kg": (_parse_float, 300.0),
        "propellant_kg": (_parse_float, 20.0),
        "payload_mass_kg": (_parse_float, 100.0),
        "thrust_mode": (_parse_str, "retrograde"),
        "dt_s": (_parse_float, 10.0),
        "sample_interval_s": (_parse_float, 60.0),
        "max_duration_days": (_parse_float, 30.0),
        "sun_direction": (_parse_floats, (1.0, 0.0, 0.0)),
        "drag_cd_area_over_mass": (_parse_float, 0.0),
    },
    "power": {
        "array_w": (_parse_float, 7300.0),
        "thruster_w": (_parse_float, 6900.0),
        "bus_w": (_parse_float, 200.0),
        "battery_capacity_wh": (_parse_float, 5700.0),
        "max_dod": (_parse_float, 0.8),
        "cycle_life": (_parse_int, 1000),
        "max_charge_w": (_parse_float, 2000.0),
        "round_trip_efficiency": (_parse_float, 1.0),
    },
    "nav": {
        "chief_altitude_km": (_parse_float, 778.0),
        "sigma_range_m": (_parse_float, 1.0),
        "sigma_angle_rad": (_parse_float, 1.0e-3),
        "q_proximity": (_parse_float, 1.0e-6),
        "q_longduration": (_parse_float, 5.0e-10),
        "filter_step_s": (_parse_float, 1.0),
        "truth_dt_proximity_s": (_parse_float, 0.1),
        "truth_dt_longduration_s": (_parse_float, 1.0),
        "thrust_n": (_parse_float, 0.3),
        "vehicle_mass_kg": (_parse_float, 420.0),
        "proximity_duration_s": (_parse_float, 6000.0),
        "longduration_duration_s": (_parse_float, 3600.0),
        "initial_relative": (_parse_floats, (280.0, 760.0, 60.0, 0.0, -0.584, 0.0)),
        "longduration_initial": (_parse_floats, (200.0, 0.0, 0.0, 0.0, -0.4172, 0.0)),
        "init_sigma_pos_m": (_parse_float, 10.0),
        "init_sigma_vel_ms": (_parse_float, 0.1),
    },
    "dtn": {
        "duration_s": (_parse_float, 21600.0),
        "grid_s": (_parse_float, 10.0),
        "buffer_capacity": (_parse_capacity, math.inf),
        "pr_mean_db": (_parse_float, 20.5),
        "pr_amplitude_db": (_parse_float, 4.5),
        "pr_period_s": (_parse_float, 6000.0),
        "pr_outages": (_parse_windows, ((9000.0, 10200.0),)),
        "pr_rate_table": (_parse_table, ((16.0, 12000.0), (19.0, 24000.0),
                                         (21.0, 36000.0), (23.0, 48000.0))),
        "rg_mean_db": (_parse_float, 34.0),
        "rg_amplitude_db": (_parse_float, 4.0),
        "rg_period_s": (_parse_float, 6000.0),
        "rg_outages": (_parse_windows, ((2000.0, 2100.0), (5600.0, 5700.0),
                                        (13200.0, 13300.0), (17200.0, 17300.0),
                                        (20600.0, 20700.0))),
        "rg_rate_table": (_parse_table, ((30.0, 35000.0), (33.0, 45000.0),
                                         (35.0, 55000.0), (37.0, 65000.0))),
        "safety_size_b": (_parse_int, 100),
        "safety_interval_s": (_parse_float, 1.0),
        "metadata_size_b": (_parse_int, 1000),
        "metadata_interval_s": (_parse_float, 10.0),
        "bulk_size_b": (_parse_int, 50000),
        "bulk_interval_s": (_parse_float, 120.0),
        "traffic_mode": (_parse_str, "periodic"),
        "pr_geom_tx_dbw": (_parse_float, 10.0),
        "pr_geom_gain_db": (_parse_float, 46.0),
        "pr_geom_fspl_const_db": (_parse_float, 99.3),
        "pr_geom_noise_dbw": (_parse_float, -131.3),
        "rg_geom_tx_dbw": (_parse_float, 10.0),
        "rg_geom_gain_db": (_parse_float, 58.0),
        "rg_geom_fspl_const_db": (_parse_float, 99.3),
        "rg_geom_noise_dbw": (_parse_float, -133.3),
    },
    "avoidance": {
        "detection_horizon_s": (_parse_float, 7200.0),
        "trigger_km": (_parse_float, 1.0),
        "clearance_km": (_parse_float, 5.0),
        "detection_range_km": (_parse_float, 50.0),
        "thrust_offset_deg": (_parse_float, 90.0),
        "check_interval_s": (_parse_float, 60.0),
        "prediction_dt_s": (_parse_float, 10.0),
        "intruder_tca_s": (_parse_float, 20000.0),
        "intruder_cross_angle_deg": (_parse_float, 0.1),
        "intruder_miss_km": (_parse_float, 0.1),
    },
    "run": {
        "seed": (_parse_int, 42),
        "mjd_offset_days": (_parse_float, 21546.2),
        "fm_dtn_duration_s": (_parse_float, 21600.0),
        "relay_altitude_km": (_parse_float, 1400.0),
        "relay_phase_deg": (_parse_float, 30.0),
        "gs_lat_deg": (_parse_float, 13.0),
        "gs_lon_deg": (_parse_float, 77.6),
    },
}


# key-level invariants checked before module construction, so rejection
# messages name the offending key
_CHECKS = [
    ("orbital", "thrust_n", lambda v: v >= 0, "must be >= 0"),
    ("orbital", "isp_s", lambda v: v > 0, "must be > 0"),
    ("orbital", "initial_altitude_km", lambda v: v > 0, "must be > 0"),
    ("orbital", "final_altitude_km", lambda v: v > 0, "must be > 0"),
    ("orbital", "dry_mass_kg", lambda v: v > 0, "must be > 0"),
    ("orbital", "propellant_kg", lambda v: v > 0, "must be > 0"),
    ("orbital", "payload_mass_kg", lambda v: v >= 0, "must be >= 0"),
    ("orbital", "dt_s", lambda v: v > 0, "must be > 0"),
    ("orbital", "sample_interval_s", lambda v: v > 0, "must be > 0"),
    ("orbital", "max_duration_days", lambda v: v > 0, "must be > 0"),
    ("orbital", "sun_direction", lambda v: len(v) == 3, "needs 3 components"),
    ("orbital", "drag_cd_area_over_mass", lambda v: v >= 0, "must be >= 0"),
    ("power", "max_dod", lambda v: 0 < v <= 1, "must be in (0, 1]"),
    ("power", "battery_capacity_wh", lambda v: v > 0, "must be > 0"),
    ("power", "cycle_life", lambda v: v >= 0, "must be >= 0"),
    ("nav", "sigma_range_m", lambda v: v > 0, "must be > 0"),
    ("nav", "sigma_angle_rad", lambda v: v > 0, "must be > 0"),
    ("nav", "q_proximity", lambda v: v >= 0, "must be >= 0"),
    ("nav", "q_longduration", lambda v: v >= 0, "must be >= 0"),
    ("nav", "filter_step_s", lambda v: v > 0, "must be > 0"),
    ("nav", "truth_dt_proximity_s", lambda v: v > 0, "must be > 0"),
    ("nav", "truth_dt_longduration_s", lambda v: v > 0, "must be > 0"),
    ("nav", "initial_relative", lambda v: len(v) == 6, "needs 6 components"),
    ("nav", "longduration_initial", lambda v: len(v) == 6, "needs 6 components"),
    ("dtn", "duration_s", lambda v: v > 0, "must be > 0"),
    ("dtn", "grid_s", lambda v: v > 0, "must be > 0"),
    ("dtn", "safety_interval_s", lambda v: v > 0, "must be > 0"),
    ("dtn", "metadata_interval_s", lambda v: v > 0, "must be > 0"),
    ("dtn", "bulk_interval_s", lambda v: v > 0, "must be > 0"),
    ("avoidance", "trigger_km", lambda v: v > 0, "must be > 0"),
    ("avoidance", "detection_horizon_s", lambda v: v > 0, "must be > 0"),
    ("avoidance", "detection_range_km", lambda v: v > 0, "must be > 0"),
    ("run", "relay_altitude_km", lambda v: v > 0, "must be > 0"),
]


@dataclass(frozen=True)
class MissionConfig:
    """Effective configuration: every schema key with defaults applied."""

    values: dict

    def __getitem__(self, section_key: tuple[str, str]):
        return self.values[section_key[0]][section_key[1]]

    # -- module-config builders -----------------------------------------

    def body(self) -> BodyConstants:
        return BodyConstants(sun_direction=tuple(self["orbital", "sun_direction"]))

    def orbital(self) -> OrbitalConfig:
        o = self.values["orbital"]
        return OrbitalConfig(
            initial_altitude_km=o["initial_altitude_km"],
            final_altitude_km=o["final_altitude_km"],
            thrust_n=o["thrust_n"],
            isp_s=o["isp_s"],
            dry_mass_kg=o["dry_mass_kg"],
            propellant_kg=o["propellant_kg"],
            payload_mass_kg=o["payload_mass_kg"],
            thrust_mode=o["thrust_mode"],
            dt_s=o["dt_s"],
            sample_interval_s=o["sample_interval_s"],
            max_duration_s=o["max_duration_days"] * 86400.0,
            drag=DragConfig(cd_area_over_mass_m2_kg=o["drag_cd_area_over_mass"]),
            body=self.body(),
        )

    def power(self) -> PowerConfig:
        return PowerConfig(**self.values["power"])

    def nav_proximity(self) -> NavConfig:
        n = self.values["nav"]
        return NavConfig(
            chief_altitude_km=n["chief_altitude_km"],
            sigma_range_m=n["sigma_range_m"],
            sigma_angle_rad=n["sigma_angle_rad"],
            process_noise_q=n["q_proximity"],
            filter_step_s=n["filter_step_s"],
            truth_dt_s=n["truth_dt_proximity_s"],
            thrust_n=0.0,
            vehicle_mass_kg=n["vehicle_mass_kg"],
            initial_relative=tuple(n["initial_relative"]),
            init_sigma_pos_m=n["init_sigma_pos_m"],
            init_sigma_vel_ms=n["init_sigma_vel_ms"],
            body=self.body(),
        )

    def nav_longduration(self) -> NavConfig:
        n = self.values["nav"]
        return NavConfig(
            chief_altitude_km=n["chief_altitude_km"],
            sigma_range_m=n["sigma_range_m"],
            sigma_angle_rad=n["sigma_angle_rad"],
            process_noise_q=n["q_longduration"],
            filter_step_s=n["filter_step_s"],
            truth_dt_s=n["truth_dt_longduration_s"],
            thrust_n=n["thrust_n"],
            vehicle_mass_kg=n["vehicle_mass_kg"],
            initial_relative=tuple(n["longduration_initial"]),
            init_sigma_pos_m=n["init_sigma_pos_m"],
            init_sigma_vel_ms=n["init_sigma_vel_ms"],
            body=self.body(),
        )

    def topology(self) -> Topology:
        d = self.values["dtn"]
        pr = LinkModel(
            name="primary-relay", src="primary", dst="relay",
            mean_db=d["pr_mean_db"], amplitude_db=d["pr_amplitude_db"],
            period_s=d["pr_period_s"], outages=d["pr_outages"],
            rate_table=d["pr_rate_table"],
        )
        rg = LinkModel(
            name="relay-ground", src="relay", dst="ground",
            mean_db=d["rg_mean_db"], amplitude_db=d["rg_amplitude_db"],
            period_s=d["rg_period_s"], outages=d["rg_outages"],
            rate_table=d["rg_rate_table"],
        )
        return Topology(nodes=("primary", "relay", "ground"), links=(pr, rg),
                        buffer_capacity_b=d["buffer_capacity"])

    def geometry_topology(self) -> Topology:
        """Geometry-mode chain for the coupled full-mission run."""
        d = self.values["dtn"]
        pr = LinkModel(
            name="primary-relay", src="primary", dst="relay", mode="geometry",
            tx_power_dbw=d["pr_geom_tx_dbw"], gain_db=d["pr_geom_gain_db"],
            fspl_const_db=d["pr_geom_fspl_const_db"],
            noise_floor_dbw=d["pr_geom_noise_dbw"],
            rate_table=d["pr_rate_table"],
        )
        rg = LinkModel(
            name="relay-ground", src="relay", dst="ground", mode="geometry",
            tx_power_dbw=d["rg_geom_tx_dbw"], gain_db=d["rg_geom_gain_db"],
            fspl_const_db=d["rg_geom_fspl_const_db"],
            noise_floor_dbw=d["rg_geom_noise_dbw"],
            rate_table=d["rg_rate_table"],
        )
        return Topology(nodes=("primary", "relay", "ground"), links=(pr, rg),
                        buffer_capacity_b=d["buffer_capacity"])

    def traffic(self) -> TrafficModel:
        d = self.values["dtn"]
        mode = d["traffic_mode"]
        return TrafficModel(classes=(
            TrafficClass("safety-critical", d["safety_size_b"], d["safety_interval_s"], mode),
            TrafficClass("metadata", d["metadata_size_b"], d["metadata_interval_s"], mode),
            TrafficClass("bulk", d["bulk_size_b"], d["bulk_interval_s"], mode),
        ))

    def avoidance_policy(self) -> AvoidancePolicy:
        a = self.values["avoidance"]
        return AvoidancePolicy(
            detection_horizon_s=a["detection_horizon_s"],
            trigger_km=a["trigger_km"],
            clearance_km=a["clearance_km"],
            detection_range_km=a["detection_range_km"],
            thrust_offset_deg=a["thrust_offset_deg"],
            check_interval_s=a["check_interval_s"],
            prediction_dt_s=a["prediction_dt_s"],
        )

    def validate(self) -> None:
        """Run every module's invariant checks against the current values."""
        for sec, key, pred, why in _CHECKS:
            v = self.values[sec][key]
            if not pred(v):
                raise ValueError(f"[{sec}] {key} {why} (got {_fmt(v)})")
        self.orbital().validate()
        self.power()
        self.nav_proximity()
        self.nav_longduration()
        self.topology()
        self.geometry_topology()
        self.traffic()
        self.avoidance_policy()


def default_config() -> MissionConfig:
    values = {sec: {k: entry[1] for k, entry in keys.items()}
              for sec, keys in _SCHEMA.items()}
    return MissionConfig(values=values)


def load_config(path: str | Path) -> MissionConfig:
    """Parse and validate a config file; omitted keys take defaults."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    values = {sec: {k: entry[1] for k, entry in keys.items()}
              for sec, keys in _SCHEMA.items()}
    section = None
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SCHEMA:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.split("#", 1)[0].strip()
        if section is None:
            raise ConfigError(f"line {lineno}: key {key!r} before any [section]")
        if key not in _SCHEMA[section]:
            raise ConfigError(f"line {lineno}: unknown key {key!r} in [{section}]")
        parser = _SCHEMA[section][key][0]
        try:
            values[section][key] = parser(val)
        except (ValueError, TypeError) as exc:
            raise ConfigError(
                f"line {lineno}: bad value for [{section}] {key}: {val!r} ({exc})"
            ) from None
    cfg = MissionConfig(values=values)
    try:
        cfg.validate()
    except ValueError as exc:
        key = _locate_key(path, str(exc))
        raise ConfigError(f"invalid configuration: {exc}{key}") from None
    return cfg


def _locate_key(path: Path, message: str) -> str:
    """Best-effort line reference for an invariant violation message."""
    tokens = [w.strip("'\"[]():,") for w in message.split()]
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        key = raw.split("=", 1)[0].strip()
        if key and any(t and t == key for t in tokens):
            return f" (see {path.name}:{lineno})"
    return ""


def dump_config(cfg: MissionConfig, path: str | Path) -> None:
    """Write the full effective configuration (round-trips via load_config)."""
    lines = ["# effective mission configuration"]
    for sec in _SCHEMA:
        lines.append("")
        lines.append(f"[{sec}]")
        for key in _SCHEMA[sec]:
            lines.append(f"{key} = {_fmt(cfg.values[sec][key])}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
