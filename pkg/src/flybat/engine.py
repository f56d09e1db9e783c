"""Fixed-step co-simulation of the host quadcopter and its battery fleet.

One deterministic timeline advances all subsystems at dt (default 1 ms):
docking state machines emit setpoints, cascaded PID controllers produce
thrust and torque (the host adds feedforward thrust against downwash),
the downwash model loads the lower vehicle, rigid-body states integrate
(the docked pair as a single composite body), and the powertrain turns
rotor power into pack discharge through the switching circuit.

All physics is deterministic; the only randomness is the electrical
contact draw at docking, consumed from a single seeded generator owned
by the world. Identical scenario and seed give byte-identical telemetry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import docking as dk
from . import powertrain as pt
from .aero import DownwashModel, align_torque, downwash_force
from .control import CascadedPid, feedforward_lookup
from .dynamics import (
    GRAVITY,
    VehicleParams,
    composite_com_offset,
    composite_params,
    inertia_rows,
    rk4_flat,
)
from .geom import q_body_z, q_rotate
from .telemetry import TelemetryRow, TelemetryWriter

PLATFORM_HEIGHT = 0.10  # m, platform surface above host COM
LEG_HEIGHT = 0.05  # m, docked vehicle COM above its leg plane
MOUNT_OFFSET = (0.0, 0.0, PLATFORM_HEIGHT + LEG_HEIGHT)  # host COM -> docked COM
GROUND_COM = LEG_HEIGHT  # COM height of a grounded unit


class SimNumericsError(RuntimeError):
    """A non-finite value appeared; names the step and subsystem."""

    def __init__(self, step_index: int, subsystem: str):
        super().__init__(f"non-finite value at step {step_index} in {subsystem}")
        self.step_index = step_index
        self.subsystem = subsystem


@dataclass(frozen=True)
class SimClock:
    """Integer-scaled simulation time: t is always step_index * dt."""

    step_index: int
    dt: float

    @property
    def t(self) -> float:
        return self.step_index * self.dt


@dataclass(frozen=True)
class MissionEvent:
    t: float
    seq: int
    kind: str
    data: str = ""

    def label(self) -> str:
        return f"{self.kind}:{self.data}" if self.data else self.kind


class MissionLog:
    """Ordered mission events plus end-of-run accumulators."""

    def __init__(self):
        self.events: list[MissionEvent] = []
        self.totals: dict[str, float] = {}
        self.energy_drawn: dict[str, float] = {}

    def append(self, t: float, kind: str, data: str = "") -> MissionEvent:
        ev = MissionEvent(t, len(self.events), kind, data)
        self.events.append(ev)
        return ev

    def of_kind(self, kind: str) -> list[MissionEvent]:
        return [e for e in self.events if e.kind == kind]

    def phase_trace(self, unit_id: int) -> list[tuple[float, str]]:
        out = []
        for e in self.events:
            if e.kind == "phase":
                uid, _, phase = e.data.partition(" ")
                if int(uid) == unit_id:
                    out.append((e.t, phase))
        return out


class _Unit:
    """One flying battery: small quadcopter + its secondary pack."""

    __slots__ = (
        "uid",
        "params",
        "k_thrust",
        "inv_mass",
        "ii",
        "jj",
        "pid",
        "own_pack",
        "secondary",
        "state",
        "phase",
        "ref",
        "ref_v",
        "home",
        "available_at",
        "spent",
        "cmd_dock",
        "cmd_undock",
        "thrust",
        "outcome",
        "docked_since",
    )

    def __init__(self, uid, params, cfg, own_pack, secondary, home):
        self.uid = uid
        self.params = params
        self.k_thrust = pt.k_thrust_from_kp(params.k_p)
        self.inv_mass = 1.0 / params.mass
        self.ii, self.jj = inertia_rows(params.inertia)
        self.pid = CascadedPid(cfg, params.mass)
        self.own_pack = own_pack
        self.secondary = secondary
        self.home = home
        self.state = (
            home[0], home[1], GROUND_COM,
            0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        )
        self.phase = dk.DockPhase.GROUNDED
        self.ref = [home[0], home[1], GROUND_COM]
        self.ref_v = [0.0, 0.0, 0.0]
        self.available_at = 0.0
        self.spent = False
        self.cmd_dock = False
        self.cmd_undock = False
        self.thrust = 0.0
        self.outcome = None
        self.docked_since = None

    @property
    def airborne(self) -> bool:
        return self.phase not in (dk.DockPhase.GROUNDED, dk.DockPhase.DOCKED)


class World:
    """Mutable simulation state; stepped by exactly one caller."""

    def __init__(self, scenario, telemetry_path=None, keep_rows: bool = False):
        from .scenario import build_world_inputs

        inp = build_world_inputs(scenario)
        self.scenario = scenario
        self.dt: float = inp.dt
        self.step_index: int = 0
        self.seed = inp.seed
        self.rng = np.random.default_rng(inp.seed)
        self.rng_draws = 0

        # host vehicle
        self.main_params: VehicleParams = inp.main_params
        self.fb_params: VehicleParams = inp.fb_params
        self.comp_params: VehicleParams = composite_params(
            inp.main_params, inp.fb_params, MOUNT_OFFSET
        )
        self.d_com = composite_com_offset(
            inp.main_params.mass, inp.fb_params.mass, MOUNT_OFFSET
        )
        self.main_cfg = inp.main_cfg
        self.comp_cfg = inp.comp_cfg
        self.main_pid = CascadedPid(inp.main_cfg, inp.main_params.mass)
        self.k_thrust_main = pt.k_thrust_from_kp(inp.main_params.k_p)
        self._main_solo_rows = (
            1.0 / inp.main_params.mass,
            *inertia_rows(inp.main_params.inertia),
        )
        self._main_comp_rows = (
            1.0 / self.comp_params.mass,
            *inertia_rows(self.comp_params.inertia),
        )
        hp = inp.hover_position
        self.hover_position = hp
        self.main_state = (
            hp[0], hp[1], hp[2],
            0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        )
        self.main_thrust = inp.main_params.mass * GRAVITY
        self.docked_unit: _Unit | None = None

        # powertrain
        self.primary: pt.BatteryPack = inp.primary
        self.primary_capacity = inp.primary.capacity_wh
        self.circuit = pt.SwitchCircuit(diode_drop=inp.diode_drop)
        self.bus = pt.BusSample(
            pt.ocv(inp.primary) - inp.diode_drop, 0.0, 0.0, pt.ActiveSource.PRIMARY
        )

        # aero / feedforward
        self.downwash: DownwashModel = inp.downwash
        self.ff_map = inp.ff_map

        # docking / fleet
        self.thresholds: dk.DockThresholds = inp.thresholds
        self.docking = inp.docking
        self.mission = inp.mission
        self.units: list[_Unit] = [
            _Unit(i, inp.fb_params, inp.fb_cfg, inp.fb_own_pack, inp.secondary, home)
            for i, home in enumerate(inp.homes)
        ]
        self.active_units: list[_Unit] = []
        self.incoming: _Unit | None = None
        self.pinned_rel: tuple[float, float, float] | None = None
        self.pinned_thrust = 0.0

        # bookkeeping
        self.log = MissionLog()
        self.terminated = False
        self.termination_reason = ""
        self.time_on_primary = 0.0
        self.time_on_secondary = 0.0
        self.energy_drawn: dict[str, float] = {"primary": 0.0}
        self.switch_count = 0
        self.contact_failure_count = 0
        self.dock_count = 0
        self.undock_count = 0
        self.contact_normal = 0.0
        self.contact_friction = 0.0
        self.contact_log: list[tuple[float, float, float, float, float]] | None = None
        self.planar_drag_coeff = inp.planar_drag_coeff
        self._pending_events: list[str] = []
        self._alt_err_abs_max = 0.0

        self.telemetry_decim = max(1, round(1.0 / (inp.telemetry_hz * inp.dt)))
        self.writer = TelemetryWriter(telemetry_path, keep_rows=keep_rows)

        self.log.append(0.0, "takeoff", "main")
        if inp.start_docked and self.units:
            u = self.units[0]
            self.active_units.append(u)
            self._attach(u, electrical=True, t=0.0)
            self.circuit = pt.command_switch(self.circuit, pt.SwitchTarget.USE_SECONDARY)
            self.log.append(0.0, "switch", "secondary")
            self.switch_count += 1

    # ------------------------------------------------------------------
    # geometry helpers
    # ------------------------------------------------------------------

    def clock(self) -> SimClock:
        return SimClock(self.step_index, self.dt)

    def main_position(self) -> tuple[float, float, float]:
        s = self.main_state
        if self.docked_unit is None:
            return (s[0], s[1], s[2])
        off = q_rotate((s[6], s[7], s[8], s[9]), self.d_com)
        return (s[0] - off[0], s[1] - off[1], s[2] - off[2])

    def _platform_point(self) -> tuple[float, float, float]:
        p = self.main_position()
        s = self.main_state
        off = q_rotate((s[6], s[7], s[8], s[9]), (0.0, 0.0, PLATFORM_HEIGHT))
        return (p[0] + off[0], p[1] + off[1], p[2] + off[2])

    def _rel_pose(self, u: _Unit) -> tuple[float, float]:
        """(lateral, leg-plane to platform-surface gap) for the FSM."""
        plat = self._platform_point()
        s = u.state
        lateral = math.hypot(s[0] - plat[0], s[1] - plat[1])
        gap = (s[2] - LEG_HEIGHT) - plat[2]
        return lateral, gap

    def pin_unit(self, uid: int, rel_pos: tuple[float, float, float], thrust: float) -> None:
        """Hold one unit kinematically at rel_pos from the host COM with
        a fixed rotor thrust (feedforward-map calibration support)."""
        u = self.units[uid]
        u.phase = dk.DockPhase.APPROACH_ABOVE
        if u not in self.active_units:
            self.active_units.append(u)
        self.pinned_rel = rel_pos
        self.pinned_thrust = thrust

    # ------------------------------------------------------------------
    # mission policy
    # ------------------------------------------------------------------

    def _available_unit(self, t: float) -> _Unit | None:
        for u in self.units:
            if u.phase is dk.DockPhase.GROUNDED and not u.spent and t >= u.available_at:
                return u
        return None

    def _dispatch(self, u: _Unit, t: float) -> None:
        u.cmd_dock = True
        u.pid.reset()
        if u not in self.active_units:
            self.active_units.append(u)
        self.incoming = u
        self.log.append(t, "dispatch", str(u.uid))
        self._pending_events.append(f"dispatch:{u.uid}")

    def _orchestrate(self, t: float) -> None:
        m = self.mission
        if m.termination == "wall_clock" and t >= m.duration:
            self._end_mission(t, "wall_clock")
            return

        docked = self.docked_unit
        if docked is not None:
            electrical = self.circuit.secondary_present
            if electrical and docked.secondary.energy_wh <= 0.0:
                # secondary exhausted: back to primary, shed the unit,
                # and launch the replacement in the same instant
                self.circuit = pt.command_switch(self.circuit, pt.SwitchTarget.USE_PRIMARY)
                self.log.append(t, "switch", "primary")
                self._pending_events.append("switch:primary")
                self._command_undock(docked, t)
                nxt = self._available_unit(t)
                if nxt is not None:
                    self._dispatch(nxt, t)
            elif not electrical and docked.docked_since is not None:
                if t - docked.docked_since >= m.failure_redispatch_delay:
                    self._command_undock(docked, t)
                    nxt = self._available_unit(t)
                    if nxt is not None:
                        self._dispatch(nxt, t)
        elif self.incoming is None and m.fleet_size > 0 and t >= m.dispatch_delay:
            nxt = self._available_unit(t)
            if nxt is not None:
                self._dispatch(nxt, t)

        if self.primary.energy_wh <= 0.0 and not (
            self.docked_unit is not None and self.circuit.secondary_present
        ):
            self._end_mission(t, "primary_depleted")

    def _command_undock(self, u: _Unit, t: float) -> None:
        u.cmd_undock = True
        self.log.append(t, "undock_command", str(u.uid))
        self._pending_events.append(f"undock:{u.uid}")

    def _end_mission(self, t: float, reason: str) -> None:
        if not self.terminated:
            self.terminated = True
            self.termination_reason = reason
            self.log.append(t, "mission_end", reason)
            self._pending_events.append(f"mission_end:{reason}")

    # ------------------------------------------------------------------
    # docking transitions
    # ------------------------------------------------------------------

    def _attach(self, u: _Unit, electrical: bool, t: float) -> None:
        ms = self.main_state
        q = (ms[6], ms[7], ms[8], ms[9])
        off = q_rotate(q, self.d_com)
        m_m, m_fb = self.main_params.mass, u.params.mass
        total = m_m + m_fb
        us = u.state
        vx = (m_m * ms[3] + m_fb * us[3]) / total
        vy = (m_m * ms[4] + m_fb * us[4]) / total
        vz = (m_m * ms[5] + m_fb * us[5]) / total
        self.main_state = (
            ms[0] + off[0], ms[1] + off[1], ms[2] + off[2],
            vx, vy, vz,
            ms[6], ms[7], ms[8], ms[9], ms[10], ms[11], ms[12],
        )
        self.docked_unit = u
        u.phase = dk.DockPhase.DOCKED
        u.docked_since = t
        u.thrust = 0.0
        self.main_pid.retune(self.comp_cfg, self.comp_params.mass)
        self.dock_count += 1
        self.log.append(t, "phase", f"{u.uid} {dk.DockPhase.DOCKED.value}")
        self.log.append(t, "dock", f"{u.uid} electrical={str(electrical).lower()}")
        self._pending_events.append(f"dock:{u.uid}")
        if electrical:
            self.circuit = pt.SwitchCircuit(
                relay_closed=self.circuit.relay_closed,
                diode_drop=self.circuit.diode_drop,
                secondary_present=True,
                switch_command=self.circuit.switch_command,
            )
            self.log.append(t, "contact", str(u.uid))
            self._pending_events.append(f"contact:{u.uid}")
        else:
            self.contact_failure_count += 1
            self.log.append(t, "contact_failure", str(u.uid))
            self._pending_events.append(f"contact_failure:{u.uid}")
        if self.incoming is u:
            self.incoming = None

    def _detach(self, u: _Unit, t: float) -> None:
        ms = self.main_state
        q = (ms[6], ms[7], ms[8], ms[9])
        off = q_rotate(q, self.d_com)
        mount = q_rotate(q, MOUNT_OFFSET)
        main_pos = (ms[0] - off[0], ms[1] - off[1], ms[2] - off[2])
        self.main_state = (
            main_pos[0], main_pos[1], main_pos[2],
            ms[3], ms[4], ms[5],
            ms[6], ms[7], ms[8], ms[9], ms[10], ms[11], ms[12],
        )
        u.state = (
            main_pos[0] + mount[0], main_pos[1] + mount[1], main_pos[2] + mount[2],
            ms[3], ms[4], ms[5],
            ms[6], ms[7], ms[8], ms[9],
            0.0, 0.0, 0.0,
        )
        u.ref = [u.state[0], u.state[1], u.state[2]]
        u.ref_v = [0.0, 0.0, 0.0]
        u.pid.reset()
        u.docked_since = None
        self.docked_unit = None
        self.undock_count += 1
        # the relay is already closed here (switch-back precedes undock)
        self.circuit = pt.SwitchCircuit(
            relay_closed=True,
            diode_drop=self.circuit.diode_drop,
            secondary_present=False,
            switch_command=pt.SwitchTarget.USE_PRIMARY,
        )
        self.main_pid.retune(self.main_cfg, self.main_params.mass)
        self.contact_normal = 0.0
        self.contact_friction = 0.0

    def _on_grounded(self, u: _Unit, t: float) -> None:
        u.state = (
            u.home[0], u.home[1], GROUND_COM,
            0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        )
        u.thrust = 0.0
        u.cmd_dock = False
        u.cmd_undock = False
        if u in self.active_units:
            self.active_units.remove(u)
        self.log.append(t, "landing", str(u.uid))
        self._pending_events.append(f"landing:{u.uid}")
        if self.mission.ground_recharge:
            u.available_at = t + self.mission.turnaround_delay
            u.own_pack = pt.BatteryPack.fresh(
                u.own_pack.cell_count,
                u.own_pack.capacity_ah,
                u.own_pack.mass,
                u.own_pack.internal_resistance,
            )
            u.secondary = pt.BatteryPack.fresh(
                u.secondary.cell_count,
                u.secondary.capacity_ah,
                u.secondary.mass,
                u.secondary.internal_resistance,
            )
            self.log.append(t + self.mission.turnaround_delay, "recharged", str(u.uid))
        else:
            u.spent = True

    # ------------------------------------------------------------------
    # per-step subsystems
    # ------------------------------------------------------------------

    def _step_fsms(self, t: float) -> None:
        for u in tuple(self.active_units):
            if self.pinned_rel is not None and u is self.units[0]:
                continue
            if u.phase is dk.DockPhase.DOCKED:
                if u.cmd_undock:
                    self._detach(u, t)
                    u.phase = dk.DockPhase.UNDOCK_ASCEND
                    u.cmd_undock = False
                    self.log.append(t, "phase", f"{u.uid} {u.phase.value}")
                    self._pending_events.append(f"phase:{u.uid}:{u.phase.value}")
                continue
            lateral, gap = self._rel_pose(u)
            altitude = u.state[2] - LEG_HEIGHT
            new_phase = dk.fsm_step(
                u.phase,
                self.thresholds,
                (lateral, gap),
                altitude,
                dk.DockCommands(dock=u.cmd_dock, undock=u.cmd_undock),
            )
            if new_phase is not u.phase:
                if new_phase is dk.DockPhase.DOCKED:
                    # impact handled post-integration; ignore here
                    continue
                if u.phase is dk.DockPhase.FREE_FALL and new_phase is dk.DockPhase.APPROACH_ABOVE:
                    self.log.append(t, "bounce_off", str(u.uid))
                    self._pending_events.append(f"bounce_off:{u.uid}")
                u.phase = new_phase
                if new_phase is dk.DockPhase.TAKEOFF:
                    u.cmd_dock = False
                self.log.append(t, "phase", f"{u.uid} {new_phase.value}")
                self._pending_events.append(f"phase:{u.uid}:{new_phase.value}")
                if new_phase is dk.DockPhase.GROUNDED:
                    self._on_grounded(u, t)

    def _unit_target(self, u: _Unit):
        """(target point, slew speed) for the unit's current phase."""
        plat = self._platform_point()
        th = self.thresholds
        cfg = self.docking
        approach_z = plat[2] + th.hover_above_gap + LEG_HEIGHT
        ph = u.phase
        if ph is dk.DockPhase.TAKEOFF:
            return (u.home[0], u.home[1], approach_z), cfg.vertical_speed
        if ph is dk.DockPhase.APPROACH_ABOVE:
            return (plat[0], plat[1], approach_z), cfg.approach_speed
        if ph is dk.DockPhase.DESCEND:
            return (plat[0], plat[1], plat[2] + th.drop_height + LEG_HEIGHT), th.descent_rate
        if ph is dk.DockPhase.UNDOCK_ASCEND:
            return (plat[0], plat[1], approach_z), cfg.vertical_speed
        if ph is dk.DockPhase.DEPART:
            return (u.home[0], u.home[1], approach_z), cfg.depart_speed
        if ph is dk.DockPhase.LANDING:
            return (u.home[0], u.home[1], GROUND_COM), cfg.vertical_speed
        return None, 0.0

    def _update_unit_ref(self, u: _Unit) -> None:
        target, speed = self._unit_target(u)
        ref, ref_v = u.ref, u.ref_v
        if target is None:
            ref_v[0] = ref_v[1] = ref_v[2] = 0.0
            return
        dx = target[0] - ref[0]
        dy = target[1] - ref[1]
        dz = target[2] - ref[2]
        dist = math.sqrt(dx * dx + dy * dy + dz * dz)
        step = speed * self.dt
        if dist <= step or dist == 0.0:
            ref[0], ref[1], ref[2] = target
            ref_v[0] = ref_v[1] = ref_v[2] = 0.0
        else:
            k = step / dist
            ref[0] += dx * k
            ref[1] += dy * k
            ref[2] += dz * k
            kv = speed / dist
            ref_v[0] = dx * kv
            ref_v[1] = dy * kv
            ref_v[2] = dz * kv

    def step(self) -> None:
        """Advance the world one dt."""
        dt = self.dt
        t = self.step_index * dt
        events = self._pending_events

        ms = self.main_state
        chk = (
            ms[0] + ms[1] + ms[2] + ms[3] + ms[4] + ms[5] + ms[6] + ms[7] + ms[8]
            + ms[9] + ms[10] + ms[11] + ms[12]
        )
        if chk != chk or chk in (float("inf"), float("-inf")):
            raise SimNumericsError(self.step_index, "host dynamics")

        self._orchestrate(t)
        if self.terminated:
            self._write_row(t)
            return
        if self.active_units:
            try:
                self._step_fsms(t)
            except dk.DockingError as exc:
                raise SimNumericsError(self.step_index, "docking geometry") from exc

        # --- flying battery controls and integration -------------------
        docked = self.docked_unit
        ms = self.main_state
        if docked is None:
            mpx, mpy, mpz = ms[0], ms[1], ms[2]
        else:
            off = q_rotate((ms[6], ms[7], ms[8], ms[9]), self.d_com)
            mpx, mpy, mpz = ms[0] - off[0], ms[1] - off[1], ms[2] - off[2]

        airborne = None
        if self.active_units:
            airborne = [u for u in self.active_units if u.phase is not dk.DockPhase.DOCKED]
            for u in airborne:
                if self.pinned_rel is not None and u is self.units[0]:
                    u.state = (
                        mpx + self.pinned_rel[0],
                        mpy + self.pinned_rel[1],
                        mpz + self.pinned_rel[2],
                        0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
                    )
                    u.thrust = self.pinned_thrust
                    continue
                s = u.state
                if u.phase is dk.DockPhase.FREE_FALL or u.own_pack.energy_wh <= 0.0:
                    u.thrust = 0.0
                    tqx = tqy = tqz = 0.0
                else:
                    self._update_unit_ref(u)
                    pid = u.pid
                    u.thrust, q_des = pid.position_flat(
                        s[0], s[1], s[2], s[3], s[4], s[5],
                        u.ref[0], u.ref[1], u.ref[2],
                        u.ref_v[0], u.ref_v[1], u.ref_v[2],
                        0.0, 0.0, 0.0, 0.0, 0.0, dt,
                    )
                    tqx, tqy, tqz = pid.attitude_flat(
                        s[6], s[7], s[8], s[9], s[10], s[11], s[12], q_des, dt
                    )
                zx, zy, zz = q_body_z((s[6], s[7], s[8], s[9]))
                th = u.thrust
                u.state = rk4_flat(
                    s, dt, u.inv_mass, u.ii, u.jj,
                    zx * th, zy * th, zz * th, tqx, tqy, tqz,
                )

        # --- host setpoint, downwash, control ---------------------------
        hx, hy, hz = self.hover_position
        svx = sax = 0.0
        m = self.mission
        if m.oscillation_amplitude > 0.0 and m.oscillation_omega > 0.0:
            ramp = t / 5.0
            if ramp > 1.0:
                ramp = 1.0
            a = m.oscillation_amplitude * ramp
            w = m.oscillation_omega
            wt = w * t
            hx += a * math.sin(wt)
            svx = a * w * math.cos(wt)
            sax = -a * w * w * math.sin(wt)
        if docked is not None:
            hz += self.d_com[2]

        ff = 0.0
        fx = fy = fz = 0.0
        tx = ty = tz = 0.0
        if airborne:
            for u in airborne:
                uth = u.thrust
                if uth <= 0.0:
                    continue
                us = u.state
                rel = (us[0] - mpx, us[1] - mpy, us[2] - mpz)
                ff += feedforward_lookup(self.ff_map, rel)
                f = downwash_force(self.downwash, rel, uth)
                fz += f[2]
                tq = align_torque(self.downwash, rel)
                tx += tq[0]
                ty += tq[1]
                tz += tq[2]

        drag_fx = drag_fy = 0.0
        if self.planar_drag_coeff > 0.0:
            vx, vy = ms[3], ms[4]
            vmag = math.sqrt(vx * vx + vy * vy)
            if vmag > 0.0:
                c = self.planar_drag_coeff * vmag
                drag_fx = -c * vx
                drag_fy = -c * vy
                fx += drag_fx
                fy += drag_fy

        pid = self.main_pid
        thrust, q_des = pid.position_flat(
            ms[0], ms[1], ms[2], ms[3], ms[4], ms[5],
            hx, hy, hz, svx, 0.0, 0.0,
            sax, 0.0, 0.0, ff, 0.0, dt,
        )
        atx, aty, atz = pid.attitude_flat(
            ms[6], ms[7], ms[8], ms[9], ms[10], ms[11], ms[12], q_des, dt
        )
        self.main_thrust = thrust
        zx, zy, zz = q_body_z((ms[6], ms[7], ms[8], ms[9]))
        inv_mass, ii, jj = self._main_solo_rows if docked is None else self._main_comp_rows
        self.main_state = ns = rk4_flat(
            ms,
            dt,
            inv_mass,
            ii,
            jj,
            fx + zx * thrust,
            fy + zy * thrust,
            fz + zz * thrust,
            tx + atx,
            ty + aty,
            tz + atz,
        )
        nz = ns[2]
        if nz != nz:
            raise SimNumericsError(self.step_index, "host dynamics")
        if docked is None:
            alt_err = nz - hz
        else:
            alt_err = (nz - self.d_com[2] * (1.0 - 2.0 * (ns[7] * ns[7] + ns[8] * ns[8]))) - (
                hz - self.d_com[2]
            )
        if alt_err < 0.0:
            alt_err = -alt_err
        if alt_err > self._alt_err_abs_max:
            self._alt_err_abs_max = alt_err

        # --- docked contact diagnostic ---------------------------------
        if docked is not None:
            ext_axial = drag_fx * zx + drag_fy * zy
            pl2 = drag_fx * drag_fx + drag_fy * drag_fy - ext_axial * ext_axial
            ext_planar = math.sqrt(pl2) if pl2 > 0.0 else 0.0
            ratio = self.fb_params.mass / self.comp_params.mass
            self.contact_normal = ratio * (thrust + ext_axial)
            self.contact_friction = ratio * ext_planar
            if self.contact_log is not None:
                self.contact_log.append(
                    (t, thrust + ext_axial, ext_planar, self.contact_normal, self.contact_friction)
                )
            if not (
                self.contact_normal >= 0.0
                and self.contact_friction <= self.docking.mu * self.contact_normal
            ):
                self.log.append(t, "contact_slip", str(docked.uid))
                events.append("contact_slip")

        # --- free-fall impacts ------------------------------------------
        if airborne:
            for u in airborne:
                if u.phase is dk.DockPhase.FREE_FALL:
                    # the drop assumes a quasi-static platform; flag the
                    # assumption when the host accelerates hard mid-fall
                    ax_h = (fx + zx * thrust) * inv_mass
                    ay_h = (fy + zy * thrust) * inv_mass
                    az_h = (fz + zz * thrust) * inv_mass - GRAVITY
                    if ax_h * ax_h + ay_h * ay_h + az_h * az_h > 4.0:
                        self.log.append(t, "platform_accel_warning", str(u.uid))
                        events.append(f"platform_accel_warning:{u.uid}")
                    lateral, gap = self._rel_pose(u)
                    if gap <= 0.0:
                        outcome = dk.capture_check(
                            lateral,
                            self.thresholds,
                            self.docking.contact_failure_probability,
                            self.rng,
                        )
                        if outcome.draw is not None:
                            self.rng_draws += 1
                        u.outcome = outcome
                        if outcome.mechanical_engaged:
                            self._attach(u, outcome.electrical_engaged, t)
                            if outcome.electrical_engaged:
                                self.circuit = pt.command_switch(
                                    self.circuit, pt.SwitchTarget.USE_SECONDARY
                                )
                                self.log.append(t, "switch", "secondary")
                                events.append("switch:secondary")
                                self.switch_count += 1
                        else:
                            u.phase = dk.DockPhase.APPROACH_ABOVE
                            self.log.append(t, "bounce_off", str(u.uid))
                            self.log.append(t, "phase", f"{u.uid} {u.phase.value}")
                            events.append(f"bounce_off:{u.uid}")

        # --- powertrain --------------------------------------------------
        load = pt.total_rotor_power(thrust, self.k_thrust_main)
        docked = self.docked_unit
        secondary = docked.secondary if docked is not None else None
        bus = pt.solve_bus(self.circuit, self.primary, secondary, load)
        self.bus = bus
        if bus.active_source is pt.ActiveSource.NONE:
            if load > 0.0:
                self._end_mission(t, "primary_depleted")
        else:
            i_p = bus.current_primary
            i_s = bus.current_secondary
            if i_p > 0.0:
                share = load * i_p / (i_p + i_s)
                before = self.primary.energy_wh
                self.primary = pt.discharge(self.primary, share, dt, current=i_p)
                self.energy_drawn["primary"] += before - self.primary.energy_wh
                self.time_on_primary += dt
                if self.primary.energy_wh <= 0.0:
                    self.log.append(t, "depleted", "primary")
                    events.append("depleted:primary")
            if i_s > 0.0 and docked is not None:
                share = load * i_s / (i_p + i_s)
                before = docked.secondary.energy_wh
                docked.secondary = pt.discharge(docked.secondary, share, dt, current=i_s)
                key = f"unit{docked.uid}.secondary"
                drawn = before - docked.secondary.energy_wh
                if key in self.energy_drawn:
                    self.energy_drawn[key] += drawn
                else:
                    self.energy_drawn[key] = drawn
                self.time_on_secondary += dt
                if docked.secondary.energy_wh <= 0.0:
                    self.log.append(t, "depleted", f"secondary:{docked.uid}")
                    events.append(f"depleted:secondary:{docked.uid}")
        if airborne:
            for u in airborne:
                if u.thrust > 0.0 and u.own_pack.energy_wh > 0.0:
                    p_fb = pt.total_rotor_power(u.thrust, u.k_thrust)
                    before = u.own_pack.energy_wh
                    u.own_pack = pt.discharge(u.own_pack, p_fb, dt)
                    key = f"unit{u.uid}.own"
                    drawn = before - u.own_pack.energy_wh
                    if key in self.energy_drawn:
                        self.energy_drawn[key] += drawn
                    else:
                        self.energy_drawn[key] = drawn
                    if u.own_pack.energy_wh <= 0.0:
                        self.log.append(t, "depleted", f"own:{u.uid}")
                        events.append(f"depleted:own:{u.uid}")

        # --- telemetry ----------------------------------------------------
        if self.step_index % self.telemetry_decim == 0 or events:
            self._check_finite()
            self._write_row(t)
        self.step_index += 1

    def _check_finite(self) -> None:
        if not all(map(math.isfinite, self.main_state)):
            raise SimNumericsError(self.step_index, "host dynamics")
        for u in self.active_units:
            if not all(map(math.isfinite, u.state)):
                raise SimNumericsError(self.step_index, f"unit {u.uid} dynamics")
        if not math.isfinite(self.bus.bus_voltage):
            raise SimNumericsError(self.step_index, "powertrain")

    def _telemetry_unit(self) -> _Unit | None:
        if self.docked_unit is not None:
            return self.docked_unit
        if self.incoming is not None:
            return self.incoming
        for u in self.active_units:
            return u
        return None

    def _write_row(self, t: float) -> None:
        mp = self.main_position()
        u = self._telemetry_unit()
        if u is None:
            fb_id, fb_phase, fb_pos = -1, "none", (0.0, 0.0, 0.0)
        elif u is self.docked_unit:
            # slaved to the platform while docked
            s = self.main_state
            mount = q_rotate((s[6], s[7], s[8], s[9]), MOUNT_OFFSET)
            fb_id, fb_phase = u.uid, u.phase.value
            fb_pos = (mp[0] + mount[0], mp[1] + mount[1], mp[2] + mount[2])
        else:
            fb_id, fb_phase, fb_pos = u.uid, u.phase.value, (u.state[0], u.state[1], u.state[2])
        bus = self.bus
        row = TelemetryRow(
            time=t,
            bus_voltage=bus.bus_voltage,
            current_total=bus.current_primary + bus.current_secondary,
            current_primary=bus.current_primary,
            current_secondary=bus.current_secondary,
            power=bus.bus_voltage * (bus.current_primary + bus.current_secondary),
            active_source=bus.active_source.value,
            main_x=mp[0],
            main_y=mp[1],
            main_z=mp[2],
            fb_id=fb_id,
            fb_phase=fb_phase,
            fb_x=fb_pos[0],
            fb_y=fb_pos[1],
            fb_z=fb_pos[2],
            contact_normal_force=self.contact_normal,
            events=";".join(self._pending_events),
        )
        self.writer.write_row(row)
        self._pending_events = []

    # ------------------------------------------------------------------

    def run(self, duration: float | None = None) -> MissionLog:
        """Step until termination or the duration guard elapses."""
        if duration is None:
            duration = self.mission.duration
        if duration <= 0.0:
            raise ValueError(f"duration must be positive, got {duration}")
        n_steps = round(duration / self.dt)
        step = self.step
        while self.step_index < n_steps and not self.terminated:
            step()
        t_end = self.step_index * self.dt
        if not self.terminated:
            self._end_mission(t_end, "duration_guard")
        self.writer.close()
        self.log.totals = self.summary_totals()
        self.log.energy_drawn = dict(self.energy_drawn)
        return self.log

    def solo_equivalent_time(self) -> float:
        """Hover time of the host alone on a fresh primary pack."""
        fresh = pt.BatteryPack.fresh(
            self.primary.cell_count,
            self.primary.capacity_ah,
            self.primary.mass,
            self.primary.internal_resistance,
        )
        load = pt.hover_power(self.main_params.mass, self.main_params.k_p)
        return pt.time_to_depletion(fresh, load, dt=0.1, diode_drop=self.circuit.diode_drop)

    def summary_totals(self) -> dict[str, float]:
        t_total = self.step_index * self.dt
        solo = self.solo_equivalent_time()
        return {
            "total_time": t_total,
            "solo_equivalent_time": solo,
            "extension_factor": t_total / solo if solo > 0.0 else float("nan"),
            "switch_count": float(self.switch_count),
            "contact_failures": float(self.contact_failure_count),
            "dock_count": float(self.dock_count),
            "undock_count": float(self.undock_count),
            "time_on_primary": self.time_on_primary,
            "time_on_secondary": self.time_on_secondary,
            "max_altitude_error": self._alt_err_abs_max,
            "primary_energy_wh": self.energy_drawn.get("primary", 0.0),
            "secondary_energy_wh": sum(
                v for k, v in self.energy_drawn.items() if k.endswith(".secondary")
            ),
        }


def step_world(world: World, dt: float) -> World:
    """Advance the world one step; dt must match the world's fixed step."""
    if abs(dt - world.dt) > 1.0e-15:
        raise ValueError(f"dt {dt} does not match the world's fixed step {world.dt}")
    world.step()
    return world


def run(world: World, duration: float) -> MissionLog:
    return world.run(duration)
