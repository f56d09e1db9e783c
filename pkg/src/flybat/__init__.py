"""Deterministic simulator of mid-air docking and in-flight battery
switching between a host quadcopter and a fleet of flying batteries."""

from .aero import DownwashModel, align_torque, downwash_force
from .control import (
    CascadedPid,
    CascadedPidConfig,
    FeedforwardMap,
    Setpoint,
    build_ff_map,
    default_config,
    feedforward_lookup,
)
from .docking import (
    ContactOutcome,
    DockCommands,
    DockPhase,
    DockThresholds,
    capture_check,
    fsm_step,
    maneuver_durations,
)
from .dynamics import (
    ContactSolution,
    RigidBodyState,
    VehicleParams,
    Wrench,
    composite_params,
    contact_forces,
    contact_retained,
    step_rigid_body,
)
from .endurance import (
    DesignComparison,
    EnduranceInputs,
    EnduranceReport,
    design_comparison,
    flight_time,
    normalized_curve,
    optimal_phi,
)
from .engine import MissionLog, SimClock, SimNumericsError, World, run, step_world
from .mission import MissionConfig, MissionResult, MissionSummary, run_mission, summarize
from .powertrain import (
    ActiveSource,
    BatteryPack,
    BusSample,
    SwitchCircuit,
    SwitchTarget,
    command_switch,
    discharge,
    hover_power,
    ocv,
    rotor_power,
    solve_bus,
)
from .scenario import Scenario, ScenarioError, bundled_scenario, load_scenario, parse_scenario
from .telemetry import TelemetryRow, read_telemetry

__version__ = "0.1.0"
