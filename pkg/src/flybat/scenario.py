"""Scenario files: line-oriented sections of key = value pairs.

Sections are [vehicles], [batteries], [circuit], [downwash], [control],
[docking], [mission], and [sim]. Keys inside a section may be dotted
(main.mass, primary.cells). Unknown sections or keys are rejected with
their line number; missing keys take the documented defaults, which
reproduce the reference vehicles: host 0.820 kg / 27 N max thrust /
203 mm props / 165 mm arms with a 3S 2.2 Ah 190 g primary pack, and the
flying battery 0.320 kg / 8 N / 76 mm / 58 mm carrying a 3S 1.5 Ah
135 g secondary and powered by its own 2S 0.8 Ah 45 g pack.

Two golden scenarios ship with the package: `solo_hover` (the host
alone, hovering to primary depletion) and `paper_demo` (the full
dock-switch-undock-repeat mission).
"""

from __future__ import annotations

import importlib.resources
import os
from dataclasses import dataclass, field, fields, is_dataclass
from functools import lru_cache
from typing import Any

import numpy as np

from . import control as ctl
from . import powertrain as pt
from .aero import DownwashModel
from .docking import DockThresholds
from .dynamics import VehicleParams

TERMINATION_MODES = ("primary_depleted", "wall_clock")
FF_MODES = ("model", "zero", "csv")

SOLO_FLIGHT_TIME = 720.0  # s, the calibration anchor for the host's k_p


class ScenarioError(ValueError):
    """Scenario parse or validation failure, with a line number when
    the problem comes from a file."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


# --------------------------------------------------------------------------
# sections
# --------------------------------------------------------------------------


@dataclass
class VehicleSpec:
    mass: float
    arm_length: float
    prop_diameter: float
    max_thrust: float
    k_p: float
    inertia_xx: float
    inertia_yy: float
    inertia_zz: float


@dataclass
class PackSpec:
    cells: int
    capacity_ah: float
    mass: float
    internal_resistance: float = 0.025


@dataclass
class VehiclesSection:
    main: VehicleSpec = field(
        default_factory=lambda: VehicleSpec(
            mass=0.820,
            arm_length=0.165,
            prop_diameter=0.203,
            max_thrust=27.0,
            k_p=0.0,  # 0 = calibrate from the 720 s solo flight
            inertia_xx=0.008,
            inertia_yy=0.008,
            inertia_zz=0.014,
        )
    )
    fb: VehicleSpec = field(
        default_factory=lambda: VehicleSpec(
            mass=0.320,
            arm_length=0.058,
            prop_diameter=0.076,
            max_thrust=8.0,
            k_p=250.0,
            inertia_xx=0.0007,
            inertia_yy=0.0007,
            inertia_zz=0.0012,
        )
    )


@dataclass
class BatteriesSection:
    primary: PackSpec = field(default_factory=lambda: PackSpec(3, 2.2, 0.190))
    secondary: PackSpec = field(default_factory=lambda: PackSpec(3, 1.5, 0.135))
    fb: PackSpec = field(default_factory=lambda: PackSpec(2, 0.8, 0.045))


@dataclass
class CircuitSection:
    diode_drop: float = 0.05


@dataclass
class DownwashSection:
    peak_force_ratio: float = 0.25
    lateral_decay: float = 0.12
    vertical_decay: float = 0.5
    align_torque_gain: float = 0.05


@dataclass
class ControlSection:
    pos_wn: float = 2.0
    pos_zeta: float = 0.8
    att_wn: float = 15.0
    att_zeta: float = 0.8
    ff_mode: str = "model"
    ff_csv_path: str = ""
    ff_lat_max: float = 0.4
    ff_lat_bins: int = 9
    ff_gap_max: float = 1.0
    ff_gap_bins: int = 11


@dataclass
class DockingSection:
    hover_above_gap: float = 0.30
    lateral_capture_radius: float = 0.020
    drop_height: float = 0.050
    descent_rate: float = 0.15
    approach_speed: float = 0.20
    depart_speed: float = 0.75
    vertical_speed: float = 0.50
    mu: float = 0.5
    contact_failure_probability: float = 0.1
    home_radius: float = 3.0


@dataclass
class MissionSection:
    fleet_size: int = 2
    ground_recharge: bool = True
    turnaround_delay: float = 60.0
    hover_x: float = 0.0
    hover_y: float = 0.0
    hover_z: float = 1.5
    termination: str = "primary_depleted"
    dispatch_delay: float = 1.0
    failure_redispatch_delay: float = 1.0
    start_docked: bool = False
    oscillation_amplitude: float = 0.0
    oscillation_omega: float = 0.0


@dataclass
class SimSection:
    dt: float = 0.001
    seed: int = 1
    duration: float = 4000.0
    telemetry_hz: float = 100.0
    planar_drag_coeff: float = 0.0


@dataclass
class Scenario:
    name: str = "default"
    vehicles: VehiclesSection = field(default_factory=VehiclesSection)
    batteries: BatteriesSection = field(default_factory=BatteriesSection)
    circuit: CircuitSection = field(default_factory=CircuitSection)
    downwash: DownwashSection = field(default_factory=DownwashSection)
    control: ControlSection = field(default_factory=ControlSection)
    docking: DockingSection = field(default_factory=DockingSection)
    mission: MissionSection = field(default_factory=MissionSection)
    sim: SimSection = field(default_factory=SimSection)

    def validate(self) -> None:
        if self.mission.termination not in TERMINATION_MODES:
            raise ScenarioError(
                f"mission.termination must be one of {TERMINATION_MODES}, "
                f"got {self.mission.termination!r}"
            )
        if self.control.ff_mode not in FF_MODES:
            raise ScenarioError(
                f"control.ff_mode must be one of {FF_MODES}, got {self.control.ff_mode!r}"
            )
        if self.mission.fleet_size < 0:
            raise ScenarioError("mission.fleet_size must be >= 0")
        if self.sim.dt <= 0.0 or self.sim.duration <= 0.0:
            raise ScenarioError("sim.dt and sim.duration must be positive")
        if self.sim.telemetry_hz <= 0.0 or self.sim.telemetry_hz > 1.0 / self.sim.dt + 1e-9:
            raise ScenarioError("sim.telemetry_hz must be in (0, 1/dt]")
        if not 0.0 <= self.docking.contact_failure_probability <= 1.0:
            raise ScenarioError("docking.contact_failure_probability must be in [0, 1]")
        if self.mission.start_docked and self.mission.fleet_size < 1:
            raise ScenarioError("mission.start_docked requires at least one fleet unit")


def default_scenario(name: str = "default") -> Scenario:
    return Scenario(name=name)


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------


def _section_keys(obj) -> dict[str, tuple]:
    """Dotted key -> attribute path for one section dataclass."""
    out: dict[str, tuple] = {}
    for f in fields(obj):
        val = getattr(obj, f.name)
        if is_dataclass(val):
            for sub in fields(val):
                out[f"{f.name}.{sub.name}"] = (f.name, sub.name)
        else:
            out[f.name] = (f.name,)
    return out


def _cast(raw: str, current: Any, key: str, line: int) -> Any:
    raw = raw.strip()
    try:
        if isinstance(current, bool):
            low = raw.lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(current, int):
            return int(raw)
        if isinstance(current, float):
            return float(raw)
        return raw
    except ValueError:
        raise ScenarioError(f"invalid value {raw!r} for key {key!r}", line) from None


def parse_scenario(text: str, name: str = "inline") -> Scenario:
    scenario = default_scenario(name)
    section_objs = {f.name: getattr(scenario, f.name) for f in fields(scenario) if f.name != "name"}
    current_section: str | None = None
    current_keys: dict[str, tuple] = {}

    for lineno, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.split("#", 1)[0].split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ScenarioError(f"malformed section header {rawline.strip()!r}", lineno)
            sec = line[1:-1].strip()
            if sec not in section_objs:
                raise ScenarioError(f"unknown section [{sec}]", lineno)
            current_section = sec
            current_keys = _section_keys(section_objs[sec])
            continue
        if "=" not in line:
            raise ScenarioError(f"expected key = value, got {rawline.strip()!r}", lineno)
        if current_section is None:
            raise ScenarioError("key outside any [section]", lineno)
        key, _, raw = line.partition("=")
        key = key.strip()
        if key not in current_keys:
            raise ScenarioError(f"unknown key {key!r} in section [{current_section}]", lineno)
        path = current_keys[key]
        obj = section_objs[current_section]
        for attr in path[:-1]:
            obj = getattr(obj, attr)
        value = _cast(raw, getattr(obj, path[-1]), key, lineno)
        setattr(obj, path[-1], value)

    scenario.validate()
    return scenario


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_scenario(text, name=os.path.splitext(os.path.basename(str(path)))[0])


def bundled_scenario(name: str) -> Scenario:
    res = importlib.resources.files("flybat").joinpath(f"scenarios/{name}.cfg")
    try:
        text = res.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ScenarioError(f"no bundled scenario named {name!r}") from None
    return parse_scenario(text, name=name)


def scenario_keys() -> list[str]:
    """All settable keys as section.key[.subkey] strings."""
    scenario = default_scenario()
    out = []
    for f in fields(scenario):
        if f.name == "name":
            continue
        for key in _section_keys(getattr(scenario, f.name)):
            out.append(f"{f.name}.{key}")
    return out


def set_scenario_value(scenario: Scenario, dotted_key: str, raw: str) -> None:
    """Apply one override like `docking.contact_failure_probability = 0.5`."""
    parts = dotted_key.split(".")
    if len(parts) < 2:
        raise ScenarioError(f"key {dotted_key!r} must be section.key")
    section, rest = parts[0], parts[1:]
    if not hasattr(scenario, section) or section == "name":
        raise ScenarioError(f"unknown section {section!r}")
    obj = getattr(scenario, section)
    keys = _section_keys(obj)
    key = ".".join(rest)
    if key not in keys:
        raise ScenarioError(f"unknown key {key!r} in section [{section}]")
    path = keys[key]
    for attr in path[:-1]:
        obj = getattr(obj, attr)
    setattr(obj, path[-1], _cast(raw, getattr(obj, path[-1]), dotted_key, 0))
    scenario.validate()


# --------------------------------------------------------------------------
# building domain objects
# --------------------------------------------------------------------------


@lru_cache(maxsize=16)
def _calibrated_main_kp(
    cells: int, capacity_ah: float, mass: float, resistance: float, vehicle_mass: float, diode_drop: float
) -> float:
    pack = pt.BatteryPack.fresh(cells, capacity_ah, mass, resistance)
    return pt.solve_kp_for_endurance(
        pack, vehicle_mass, SOLO_FLIGHT_TIME, dt=0.1, diode_drop=diode_drop
    )


def vehicle_params(spec: VehicleSpec, k_p: float | None = None) -> VehicleParams:
    return VehicleParams(
        mass=spec.mass,
        arm_length=spec.arm_length,
        prop_diameter=spec.prop_diameter,
        max_thrust=spec.max_thrust,
        inertia=np.diag([spec.inertia_xx, spec.inertia_yy, spec.inertia_zz]),
        k_p=spec.k_p if k_p is None else k_p,
    )


def battery_pack(spec: PackSpec) -> pt.BatteryPack:
    return pt.BatteryPack.fresh(spec.cells, spec.capacity_ah, spec.mass, spec.internal_resistance)


@dataclass
class WorldInputs:
    dt: float
    seed: int
    telemetry_hz: float
    main_params: VehicleParams
    fb_params: VehicleParams
    main_cfg: ctl.CascadedPidConfig
    comp_cfg: ctl.CascadedPidConfig
    fb_cfg: ctl.CascadedPidConfig
    primary: pt.BatteryPack
    secondary: pt.BatteryPack
    fb_own_pack: pt.BatteryPack
    diode_drop: float
    downwash: DownwashModel
    ff_map: ctl.FeedforwardMap
    thresholds: DockThresholds
    docking: DockingSection
    mission: "MissionRuntime"
    hover_position: tuple[float, float, float]
    homes: list[tuple[float, float]]
    planar_drag_coeff: float
    start_docked: bool


@dataclass
class MissionRuntime:
    fleet_size: int
    ground_recharge: bool
    turnaround_delay: float
    termination: str
    dispatch_delay: float
    failure_redispatch_delay: float
    duration: float
    oscillation_amplitude: float
    oscillation_omega: float


def build_world_inputs(scenario: Scenario) -> WorldInputs:
    scenario.validate()
    v, b = scenario.vehicles, scenario.batteries
    main_kp = v.main.k_p
    if main_kp <= 0.0:
        main_kp = _calibrated_main_kp(
            b.primary.cells,
            b.primary.capacity_ah,
            b.primary.mass,
            b.primary.internal_resistance,
            v.main.mass,
            scenario.circuit.diode_drop,
        )
    main = vehicle_params(v.main, k_p=main_kp)
    fb = vehicle_params(v.fb)

    c = scenario.control
    from .dynamics import composite_params as make_composite
    from .engine import MOUNT_OFFSET

    main_cfg = ctl.default_config(main, c.pos_wn, c.pos_zeta, c.att_wn, c.att_zeta)
    comp = make_composite(main, fb, MOUNT_OFFSET)
    comp_cfg = ctl.default_config(comp, c.pos_wn, c.pos_zeta, c.att_wn, c.att_zeta)
    fb_cfg = ctl.default_config(fb, c.pos_wn, c.pos_zeta, c.att_wn, c.att_zeta)

    d = scenario.downwash
    downwash = DownwashModel(
        peak_force_ratio=d.peak_force_ratio,
        lateral_decay=d.lateral_decay,
        vertical_decay=d.vertical_decay,
        align_torque_gain=d.align_torque_gain,
    )

    lat_edges = np.linspace(0.0, c.ff_lat_max, c.ff_lat_bins + 1)
    gap_edges = np.linspace(0.0, c.ff_gap_max, c.ff_gap_bins + 1)
    if c.ff_mode == "zero":
        ff_map = ctl.zero_map(lat_edges, gap_edges)
    elif c.ff_mode == "csv":
        ff_map = ctl.import_map_csv(c.ff_csv_path)
    else:
        # converged learn-from-integrals map for the small vehicle at hover thrust
        ff_map = ctl.map_from_model(downwash, fb.mass * 9.81, lat_edges, gap_edges)

    dock = scenario.docking
    thresholds = DockThresholds(
        hover_above_gap=dock.hover_above_gap,
        lateral_capture_radius=dock.lateral_capture_radius,
        drop_height=dock.drop_height,
        descent_rate=dock.descent_rate,
    )

    m = scenario.mission
    n = m.fleet_size
    homes = []
    for i in range(n):
        ang = 2.0 * np.pi * i / max(n, 1)
        homes.append(
            (
                m.hover_x + dock.home_radius * float(np.cos(ang)),
                m.hover_y + dock.home_radius * float(np.sin(ang)),
            )
        )

    return WorldInputs(
        dt=scenario.sim.dt,
        seed=scenario.sim.seed,
        telemetry_hz=scenario.sim.telemetry_hz,
        main_params=main,
        fb_params=fb,
        main_cfg=main_cfg,
        comp_cfg=comp_cfg,
        fb_cfg=fb_cfg,
        primary=battery_pack(b.primary),
        secondary=battery_pack(b.secondary),
        fb_own_pack=battery_pack(b.fb),
        diode_drop=scenario.circuit.diode_drop,
        downwash=downwash,
        ff_map=ff_map,
        thresholds=thresholds,
        docking=dock,
        mission=MissionRuntime(
            fleet_size=m.fleet_size,
            ground_recharge=m.ground_recharge,
            turnaround_delay=m.turnaround_delay,
            termination=m.termination,
            dispatch_delay=m.dispatch_delay,
            failure_redispatch_delay=m.failure_redispatch_delay,
            duration=scenario.sim.duration,
            oscillation_amplitude=m.oscillation_amplitude,
            oscillation_omega=m.oscillation_omega,
        ),
        hover_position=(m.hover_x, m.hover_y, m.hover_z),
        homes=homes,
        planar_drag_coeff=scenario.sim.planar_drag_coeff,
        start_docked=m.start_docked,
    )
