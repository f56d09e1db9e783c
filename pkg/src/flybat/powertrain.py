"""Battery packs, rotor power, and the behavioral battery-switching circuit.

The pack model is energy-based: state of charge is remaining energy over
initial energy, mapped to an open-circuit voltage through a fixed
piecewise-linear LiPo curve (4.20 V/cell full, 3.00 V/cell empty). Rotor
aerodynamic power scales as thrust**1.5; hover electric power is
k_p * total_mass**1.5.

The switching circuit is an ideal-diode OR with a normally closed relay
in series with the primary pack. Each connected source sees the bus
through a constant diode drop; the highest-voltage source conducts,
reverse current is impossible, and the relay (openable only while a
secondary is present) can force the load onto the secondary even at a
lower voltage.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from math import sqrt

GRAVITY = 9.81
CELL_FULL_V = 4.2
CELL_EMPTY_V = 3.0
PARALLEL_SAFE_V_PER_CELL = 0.2

# (state of charge, volts per cell), monotone in SoC
OCV_KNOTS = (
    (0.0, 3.00),
    (0.05, 3.45),
    (0.2, 3.70),
    (0.9, 4.05),
    (1.0, 4.20),
)


class PowertrainError(ValueError):
    """Raised for invalid powertrain inputs or forbidden circuit commands."""


class SwitchTarget(Enum):
    USE_PRIMARY = "primary"
    USE_SECONDARY = "secondary"


class ActiveSource(Enum):
    PRIMARY = "primary"
    SECONDARY = "secondary"
    BOTH = "both"
    NONE = "none"


@dataclass(frozen=True)
class BatteryPack:
    """One LiPo pack. energy_wh is the remaining energy; capacity_wh the
    energy when full. Default full energy is capacity_ah * cells * 3.7 V
    nominal per cell."""

    cell_count: int
    capacity_ah: float
    mass: float
    energy_wh: float
    capacity_wh: float
    internal_resistance: float = 0.025

    @staticmethod
    def fresh(
        cell_count: int, capacity_ah: float, mass: float, internal_resistance: float = 0.025
    ) -> "BatteryPack":
        energy = capacity_ah * cell_count * 3.7
        return BatteryPack(
            cell_count=cell_count,
            capacity_ah=capacity_ah,
            mass=mass,
            energy_wh=energy,
            capacity_wh=energy,
            internal_resistance=internal_resistance,
        )

    def __post_init__(self):
        if self.cell_count < 1:
            raise PowertrainError(f"cell_count must be >= 1, got {self.cell_count}")
        if self.capacity_wh <= 0.0:
            raise PowertrainError("capacity_wh must be positive")
        if not -1.0e-12 <= self.energy_wh <= self.capacity_wh * (1.0 + 1.0e-12):
            raise PowertrainError(
                f"energy_wh {self.energy_wh} outside [0, {self.capacity_wh}]"
            )

    @property
    def soc(self) -> float:
        return max(0.0, min(1.0, self.energy_wh / self.capacity_wh))

    @property
    def is_depleted(self) -> bool:
        return self.energy_wh <= 0.0


@dataclass(frozen=True)
class SwitchCircuit:
    """Relay + diode OR state. The relay coil is powered through the
    secondary input, so the relay can only be open while a secondary
    source is present."""

    relay_closed: bool = True
    diode_drop: float = 0.05
    secondary_present: bool = False
    switch_command: SwitchTarget = SwitchTarget.USE_PRIMARY

    def __post_init__(self):
        if not 0.0 < self.diode_drop <= 0.2:
            raise PowertrainError(f"diode_drop {self.diode_drop} outside (0, 0.2] V")
        if not self.relay_closed and not self.secondary_present:
            raise PowertrainError("relay cannot be open without a secondary source")


@dataclass(frozen=True)
class BusSample:
    """Electrical state of the load bus at one instant."""

    bus_voltage: float
    current_primary: float
    current_secondary: float
    active_source: ActiveSource

    @property
    def current_total(self) -> float:
        return self.current_primary + self.current_secondary


def rotor_power(thrust_per_rotor: float, k_thrust_power: float) -> float:
    """Aerodynamic power draw of one propeller: k * thrust**1.5 (W)."""
    if thrust_per_rotor < 0.0:
        raise PowertrainError(f"thrust must be non-negative, got {thrust_per_rotor}")
    return k_thrust_power * thrust_per_rotor * sqrt(thrust_per_rotor)


def hover_power(total_mass: float, k_p: float) -> float:
    """Hover electric power k_p * total_mass**1.5 (W)."""
    if total_mass < 0.0:
        raise PowertrainError(f"mass must be non-negative, got {total_mass}")
    return k_p * total_mass * sqrt(total_mass)


def k_thrust_from_kp(k_p: float) -> float:
    """Per-rotor thrust-to-power constant matching a vehicle k_p.

    A quad hovering at thrust m*g split over 4 rotors draws
    4 * k * (m*g/4)**1.5 = (k * g**1.5 / 2) * m**1.5, so k = 2*k_p/g**1.5."""
    return 2.0 * k_p / (GRAVITY * sqrt(GRAVITY))


def total_rotor_power(total_thrust: float, k_thrust_power: float) -> float:
    """Power of four identical rotors sharing total_thrust equally."""
    if total_thrust < 0.0:
        raise PowertrainError(f"thrust must be non-negative, got {total_thrust}")
    return 0.5 * k_thrust_power * total_thrust * sqrt(total_thrust)


# per-segment (s0, v0, slope, s1) for fast interpolation
_OCV_SEGMENTS = tuple(
    (s0, v0, (v1 - v0) / (s1 - s0), s1)
    for (s0, v0), (s1, v1) in zip(OCV_KNOTS, OCV_KNOTS[1:])
)


def ocv(pack: BatteryPack) -> float:
    """Open-circuit voltage of the whole pack from its state of charge."""
    return ocv_per_cell(pack.energy_wh / pack.capacity_wh) * pack.cell_count


def ocv_per_cell(soc: float) -> float:
    if soc <= 0.0:
        return CELL_EMPTY_V
    if soc >= 1.0:
        return CELL_FULL_V
    for s0, v0, slope, s1 in _OCV_SEGMENTS:
        if soc <= s1:
            return v0 + slope * (soc - s0)
    return CELL_FULL_V


def _drained(pack: BatteryPack, energy_wh: float) -> BatteryPack:
    """Copy of pack with new remaining energy; skips revalidation since
    the value is already clamped to [0, capacity]."""
    new = BatteryPack.__new__(BatteryPack)
    d = new.__dict__
    d.update(pack.__dict__)
    d["energy_wh"] = energy_wh
    return new


def discharge(
    pack: BatteryPack, load_power: float, dt: float, current: float | None = None
) -> BatteryPack:
    """Remove load_power*dt plus the I^2 R loss from the pack.

    current defaults to load_power / ocv(pack); the simulation passes the
    bus-apportioned current so the energy audit reconstructs losses from
    telemetry exactly. Energy clamps at zero; callers detect depletion
    through is_depleted."""
    if load_power < 0.0:
        raise PowertrainError(f"load_power must be non-negative, got {load_power}")
    if load_power == 0.0:
        return pack
    if current is None:
        v = ocv(pack)
        current = load_power / v if v > 0.0 else 0.0
    loss = current * current * pack.internal_resistance
    energy = pack.energy_wh - (load_power + loss) * dt / 3600.0
    return _drained(pack, energy if energy > 0.0 else 0.0)


def solve_bus(
    circuit: SwitchCircuit,
    primary: BatteryPack,
    secondary: BatteryPack | None,
    load_power: float,
) -> BusSample:
    """Steady-state bus sample for the diode-OR circuit under a constant
    power load.

    The source with the highest open-circuit voltage sets the bus one
    diode drop below it; any other source within the drop window
    conducts too, splitting current in proportion to voltage surplus.
    Depleted packs and a disconnected primary (relay open) do not
    conduct. With no conducting source the sample reports a collapsed
    bus (active_source NONE, zero volts)."""
    if load_power < 0.0:
        raise PowertrainError(f"load_power must be non-negative, got {load_power}")
    v_p = None
    if circuit.relay_closed and not primary.is_depleted:
        v_p = ocv(primary)
    v_s = None
    if circuit.secondary_present and secondary is not None and not secondary.is_depleted:
        v_s = ocv(secondary)

    if v_p is None and v_s is None:
        return BusSample(0.0, 0.0, 0.0, ActiveSource.NONE)

    v_top = max(v for v in (v_p, v_s) if v is not None)
    bus = v_top - circuit.diode_drop
    surplus_p = max(0.0, (v_p - bus)) if v_p is not None else 0.0
    surplus_s = max(0.0, (v_s - bus)) if v_s is not None else 0.0

    if surplus_p > 0.0 and surplus_s > 0.0:
        # Both conduct only inside the diode window, which is at most the
        # LiPo parallel-safety limit of 0.2 V per cell.
        assert abs(v_p - v_s) <= PARALLEL_SAFE_V_PER_CELL * min(
            primary.cell_count, secondary.cell_count
        ), "simultaneous conduction outside the parallel-safe voltage window"

    total_current = load_power / bus if bus > 0.0 else 0.0
    share = surplus_p + surplus_s
    i_p = total_current * (surplus_p / share) if share > 0.0 else 0.0
    i_s = total_current * (surplus_s / share) if share > 0.0 else 0.0

    if surplus_p > 0.0 and surplus_s > 0.0:
        source = ActiveSource.BOTH
    elif surplus_p > 0.0:
        source = ActiveSource.PRIMARY
    else:
        source = ActiveSource.SECONDARY
    return BusSample(bus, i_p, i_s, source)


def command_switch(circuit: SwitchCircuit, target: SwitchTarget) -> SwitchCircuit:
    """Drive the relay. USE_PRIMARY closes it (the normally closed
    default); USE_SECONDARY opens it, which the coil wiring only allows
    while a secondary source is present."""
    if target is SwitchTarget.USE_SECONDARY:
        if not circuit.secondary_present:
            raise PowertrainError(
                "cannot switch to secondary: no secondary source present"
            )
        return replace(circuit, relay_closed=False, switch_command=target)
    return replace(circuit, relay_closed=True, switch_command=target)


def time_to_depletion(
    pack: BatteryPack, load_power: float, dt: float = 0.1, diode_drop: float = 0.05
) -> float:
    """Seconds until the pack empties under a constant-power load, with
    I^2 R losses computed from the bus-side current. Used for endurance
    calibration and solo-equivalent reporting."""
    if load_power <= 0.0:
        return float("inf")
    t = 0.0
    p = pack
    while not p.is_depleted:
        bus = ocv(p) - diode_drop
        current = load_power / bus if bus > 0.0 else 0.0
        p = discharge(p, load_power, dt, current=current)
        t += dt
        if t > 1.0e7:
            raise PowertrainError("pack does not deplete")
    return t


def solve_kp_for_endurance(
    pack: BatteryPack,
    vehicle_mass: float,
    target_time: float,
    dt: float = 0.1,
    diode_drop: float = 0.05,
) -> float:
    """Powertrain constant k_p such that hovering at vehicle_mass
    depletes the pack in target_time seconds, including resistive and
    bus losses. Bisection on the shadow discharge integration."""
    if target_time <= 0.0:
        raise PowertrainError("target_time must be positive")

    def flight_time(k_p: float) -> float:
        return time_to_depletion(pack, hover_power(vehicle_mass, k_p), dt, diode_drop)

    lo, hi = 1.0, 4.0 * pack.capacity_wh * 3600.0 / (
        target_time * vehicle_mass * sqrt(vehicle_mass)
    )
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if flight_time(mid) > target_time:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
