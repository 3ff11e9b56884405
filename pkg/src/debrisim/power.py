"""Solar-array / battery energy budget through eclipse cycles.

Sign convention: net power is positive into the battery. State of charge
is a fraction of capacity, clamped to [1 - max_dod, 1]; hitting the floor
latches a violation flag rather than raising.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class PowerConfig:
    """Array, load and battery sizing.

    ``max_charge_w`` models charge acceptance: sunlit surplus beyond it
    does not reach the battery. ``round_trip_efficiency`` applies to
    charging only and defaults to lossless for auditability.
    """

    array_w: float = 7300.0
    thruster_w: float = 6900.0
    bus_w: float = 200.0
    battery_capacity_wh: float = 5700.0
    max_dod: float = 0.8
    cycle_life: int = 1000
    max_charge_w: float = 2000.0
    round_trip_efficiency: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.max_dod <= 1.0:
            raise ValueError("max_dod must be in (0, 1]")
        if min(self.array_w, self.thruster_w, self.bus_w, self.max_charge_w) < 0:
            raise ValueError("powers must be non-negative")
        if self.battery_capacity_wh <= 0:
            raise ValueError("battery capacity must be positive")
        if not 0.0 < self.round_trip_efficiency <= 1.0:
            raise ValueError("round_trip_efficiency must be in (0, 1]")

    @property
    def soc_floor(self) -> float:
        return 1.0 - self.max_dod


@dataclass(frozen=True)
class BatteryState:
    """Battery state of charge plus cycle bookkeeping.

    ``discharging`` records the phase of the current eclipse/sunlit pair;
    a discharge-to-charge transition completes one cycle.
    """

    soc: float = 1.0
    cycles: int = 0
    floor_violated: bool = False
    discharging: bool = False

    def __post_init__(self):
        if not 0.0 <= self.soc <= 1.0:
            raise ValueError("soc must be in [0, 1]")


def net_power(eclipsed: bool, cfg: PowerConfig) -> float:
    """Signed battery power in W for the sunlit or eclipse phase."""
    if eclipsed:
        return -(cfg.thruster_w + cfg.bus_w)
    surplus = cfg.array_w - cfg.thruster_w - cfg.bus_w
    if surplus > 0.0:
        return min(surplus, cfg.max_charge_w)
    return surplus


def battery_step(state: BatteryState, net_w: float, dt_s: float, cfg: PowerConfig) -> BatteryState:
    """Integrate the battery over dt seconds of constant net power."""
    if dt_s <= 0:
        raise ValueError("battery_step: dt must be positive")
    if net_w == 0.0:
        return state
    energy_wh = net_w * dt_s / 3600.0
    if energy_wh > 0.0:
        energy_wh *= cfg.round_trip_efficiency
    soc = state.soc + energy_wh / cfg.battery_capacity_wh
    violated = state.floor_violated
    if soc < cfg.soc_floor:
        soc = cfg.soc_floor
        violated = True
    soc = min(soc, 1.0)
    cycles = state.cycles
    discharging = state.discharging
    if net_w < 0.0:
        discharging = True
    elif state.discharging:
        cycles += 1
        discharging = False
    return BatteryState(soc=soc, cycles=cycles, floor_violated=violated,
                        discharging=discharging)


def eclipse_endurance(cfg: PowerConfig) -> float:
    """Minutes of eclipse load the usable battery energy can carry."""
    load = cfg.thruster_w + cfg.bus_w
    if load <= 0.0:
        return math.inf
    return cfg.battery_capacity_wh * cfg.max_dod / load * 60.0


def cycle_limited_life(cfg: PowerConfig, orbit_period_s: float) -> float:
    """Mission days allowed by the cycle budget at one cycle per orbit."""
    if orbit_period_s <= 0:
        raise ValueError("orbit period must be positive")
    return cfg.cycle_life * orbit_period_s / 86400.0
