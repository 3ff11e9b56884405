"""Deterministic mission simulator for a solar-electric multi-debris deorbit module."""

from .avoidance import (
    AvoidancePolicy,
    Conjunction,
    EvasionPlan,
    build_crossing_intruder,
    detect_conjunction,
    plan_evasion,
    resume_deorbit,
    run_deorbit_with_avoidance,
)
from .config import ConfigError, MissionConfig, default_config, dump_config, load_config
from .dynamics import (
    BodyConstants,
    DeorbitResult,
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
from .dtn import (
    Bundle,
    DtnMetrics,
    LinkModel,
    NodeBuffer,
    Topology,
    TrafficClass,
    TrafficModel,
    backlog_series,
    default_topology,
    latency_cdf,
    rate_from_snr,
    run_dtn,
    snr_at,
)
from .nav import (
    EkfEstimate,
    LvlhState,
    NavConfig,
    NavResult,
    RadarMeasurement,
    cw_transition,
    cw_control_matrix,
    ekf_predict,
    ekf_update,
    measurement_jacobian,
    radar_measure,
    run_longduration_pair,
    run_longduration_scenario,
    run_proximity_scenario,
    truth_propagate,
)
from .power import (
    BatteryState,
    PowerConfig,
    battery_step,
    cycle_limited_life,
    eclipse_endurance,
    net_power,
)
from .plots import emit_plot
from .scenarios import SCENARIOS, ScenarioReport, recompute_report, run_scenario

__version__ = "0.1.0"
