"""Cascaded PID position/attitude control and the feedforward thrust map.

The position loop turns position error into a desired acceleration (PID
with reference-velocity damping and optional acceleration feedforward),
from which the desired total thrust and attitude follow. The attitude
loop is PD on the axis-angle rotation error with integral action on yaw.
The host vehicle adds a feedforward thrust looked up from a map over the
relative position of the vehicle above it; the small vehicle flies the
same cascade without the feedforward term.

Default gains come from pole placement on the double-integrator
approximation: position loop at 2 rad/s, attitude loop at 15 rad/s, both
with damping 0.8. Attitude gains are stated in torque units, scaled by
the vehicle inertia.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from math import hypot, sqrt

import numpy as np

from .dynamics import GRAVITY, RigidBodyState, VehicleParams
from .geom import (
    Quat,
    Vec3,
    VEC3_ZERO,
    attitude_from_thrust_direction,
    q_error_rotvec,
)

log = logging.getLogger(__name__)

POS_WN = 2.0  # rad/s
POS_ZETA = 0.8
ATT_WN = 15.0  # rad/s
ATT_ZETA = 0.8


class ControlError(ValueError):
    """Raised for invalid controller configuration."""


@dataclass(frozen=True)
class Setpoint:
    """Position/yaw reference plus feedforward terms.

    velocity is the reference velocity (zero for a fixed hover point);
    feedforward_accel supports scripted maneuvers; feedforward_thrust is
    the downwash-rejection term added directly to the total thrust."""

    position: Vec3 = VEC3_ZERO
    yaw: float = 0.0
    feedforward_thrust: float = 0.0
    velocity: Vec3 = VEC3_ZERO
    feedforward_accel: Vec3 = VEC3_ZERO


@dataclass
class CascadedPidConfig:
    pos_p: Vec3  # 1/s^2
    pos_i: Vec3  # 1/s^3
    pos_d: Vec3  # 1/s
    att_p: Vec3  # N*m/rad
    att_d: Vec3  # N*m/(rad/s)
    yaw_i: float  # N*m/(rad*s)
    pos_int_limit: float  # m*s, clamp on integrated position error
    yaw_int_limit: float  # rad*s
    max_thrust: float  # N

    def __post_init__(self):
        if any(g < 0.0 for g in (*self.pos_p, *self.pos_i, *self.pos_d)):
            raise ControlError("position gains must be non-negative")
        if any(g < 0.0 for g in (*self.att_p, *self.att_d)) or self.yaw_i < 0.0:
            raise ControlError("attitude gains must be non-negative")
        if self.pos_int_limit <= 0.0 or self.yaw_int_limit <= 0.0:
            raise ControlError("integrator limits must be positive")
        if self.max_thrust <= 0.0:
            raise ControlError("max_thrust must be positive")


def default_config(
    params: VehicleParams,
    pos_wn: float = POS_WN,
    pos_zeta: float = POS_ZETA,
    att_wn: float = ATT_WN,
    att_zeta: float = ATT_ZETA,
) -> CascadedPidConfig:
    """Pole-placement gains for one vehicle."""
    kp = pos_wn * pos_wn
    kd = 2.0 * pos_zeta * pos_wn
    ki = 0.5 * kp  # slow integral; Routh margin kp*kd >> ki
    idiag = np.diag(params.inertia)
    att_p = tuple(float(i) * att_wn * att_wn for i in idiag)
    att_d = tuple(float(i) * 2.0 * att_zeta * att_wn for i in idiag)
    return CascadedPidConfig(
        pos_p=(kp, kp, kp),
        pos_i=(ki, ki, ki),
        pos_d=(kd, kd, kd),
        att_p=att_p,
        att_d=att_d,
        yaw_i=float(idiag[2]) * 50.0,
        pos_int_limit=2.0,
        yaw_int_limit=0.5,
        max_thrust=params.max_thrust,
    )


class CascadedPid:
    """One controller instance per vehicle; holds integrator state."""

    __slots__ = ("cfg", "mass", "ix", "iy", "iz", "iyaw")

    def __init__(self, cfg: CascadedPidConfig, mass: float):
        self.cfg = cfg
        self.mass = mass
        self.reset()

    def reset(self) -> None:
        self.ix = 0.0
        self.iy = 0.0
        self.iz = 0.0
        self.iyaw = 0.0

    def retune(self, cfg: CascadedPidConfig, mass: float) -> None:
        """Swap gains and mass (dock/undock transitions); integrators
        carry over since they act in acceleration units."""
        self.cfg = cfg
        self.mass = mass

    def position_control(
        self, state: RigidBodyState, setpoint: Setpoint, dt: float
    ) -> tuple[float, Quat]:
        """Desired total thrust (N, clamped) and attitude for this step."""
        if dt <= 0.0:
            raise ControlError(f"dt must be positive, got {dt}")
        return self.position_flat(
            state.position[0], state.position[1], state.position[2],
            state.velocity[0], state.velocity[1], state.velocity[2],
            setpoint.position[0], setpoint.position[1], setpoint.position[2],
            setpoint.velocity[0], setpoint.velocity[1], setpoint.velocity[2],
            setpoint.feedforward_accel[0], setpoint.feedforward_accel[1],
            setpoint.feedforward_accel[2],
            setpoint.feedforward_thrust, setpoint.yaw, dt,
        )

    def position_flat(
        self, px, py, pz, vx, vy, vz, rx, ry, rz, rvx, rvy, rvz,
        ffx, ffy, ffz, ff_thrust, yaw, dt,
    ) -> tuple[float, Quat]:
        cfg = self.cfg
        ex, ey, ez = rx - px, ry - py, rz - pz
        lim = cfg.pos_int_limit
        ix = self.ix + ex * dt
        iy = self.iy + ey * dt
        iz = self.iz + ez * dt
        self.ix = ix = lim if ix > lim else (-lim if ix < -lim else ix)
        self.iy = iy = lim if iy > lim else (-lim if iy < -lim else iy)
        self.iz = iz = lim if iz > lim else (-lim if iz < -lim else iz)
        ax = cfg.pos_p[0] * ex + cfg.pos_i[0] * ix + cfg.pos_d[0] * (rvx - vx) + ffx
        ay = cfg.pos_p[1] * ey + cfg.pos_i[1] * iy + cfg.pos_d[1] * (rvy - vy) + ffy
        az = cfg.pos_p[2] * ez + cfg.pos_i[2] * iz + cfg.pos_d[2] * (rvz - vz) + ffz
        m = self.mass
        fx, fy, fz = m * ax, m * ay, m * (az + GRAVITY)
        thrust = sqrt(fx * fx + fy * fy + fz * fz) + ff_thrust
        if thrust < 0.0:
            thrust = 0.0
        elif thrust > cfg.max_thrust:
            thrust = cfg.max_thrust
        q_des = attitude_from_thrust_direction((fx, fy, fz), yaw)
        return thrust, q_des

    def attitude_control(self, state: RigidBodyState, q_des: Quat, dt: float) -> Vec3:
        """Body torque from PD on the rotation error plus yaw integral."""
        q = state.attitude
        w = state.angular_velocity
        return self.attitude_flat(
            q[0], q[1], q[2], q[3], w[0], w[1], w[2], q_des, dt
        )

    def attitude_flat(self, qw, qx, qy, qz, wx, wy, wz, q_des, dt) -> Vec3:
        cfg = self.cfg
        ex, ey, ez = q_error_rotvec((qw, qx, qy, qz), q_des)
        lim = cfg.yaw_int_limit
        iyaw = self.iyaw + ez * dt
        self.iyaw = iyaw = lim if iyaw > lim else (-lim if iyaw < -lim else iyaw)
        return (
            cfg.att_p[0] * ex - cfg.att_d[0] * wx,
            cfg.att_p[1] * ey - cfg.att_d[1] * wy,
            cfg.att_p[2] * ez - cfg.att_d[2] * wz + cfg.yaw_i * iyaw,
        )

    @property
    def integral_accel_z(self) -> float:
        """Integral contribution to vertical acceleration (m/s^2); the
        thrust offset it sustains is mass * integral_accel_z."""
        return self.cfg.pos_i[2] * self.iz


# --------------------------------------------------------------------------
# Feedforward thrust map
# --------------------------------------------------------------------------

FF_LAT_MAX = 0.4  # m
FF_LAT_BINS = 9
FF_GAP_MAX = 1.0  # m
FF_GAP_BINS = 11


@dataclass
class FeedforwardMap:
    """Extra host thrust, binned over (lateral offset, vertical gap) of
    the vehicle above. Values sit at bin centers; lookups interpolate
    bilinearly between centers and read zero outside the binned area."""

    lat_edges: np.ndarray  # (nl+1,)
    gap_edges: np.ndarray  # (ng+1,)
    values: np.ndarray  # (nl, ng), N

    def __post_init__(self):
        self.lat_edges = np.asarray(self.lat_edges, dtype=float)
        self.gap_edges = np.asarray(self.gap_edges, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        nl, ng = len(self.lat_edges) - 1, len(self.gap_edges) - 1
        if self.values.shape != (nl, ng):
            raise ControlError(
                f"map values shape {self.values.shape} does not match bins ({nl}, {ng})"
            )
        if np.any(self.values < 0.0):
            raise ControlError("feedforward thrust entries must be non-negative")
        self._lat_centers = 0.5 * (self.lat_edges[:-1] + self.lat_edges[1:])
        self._gap_centers = 0.5 * (self.gap_edges[:-1] + self.gap_edges[1:])

    @property
    def lat_centers(self) -> np.ndarray:
        return self._lat_centers

    @property
    def gap_centers(self) -> np.ndarray:
        return self._gap_centers


def default_edges() -> tuple[np.ndarray, np.ndarray]:
    return (
        np.linspace(0.0, FF_LAT_MAX, FF_LAT_BINS + 1),
        np.linspace(0.0, FF_GAP_MAX, FF_GAP_BINS + 1),
    )


def zero_map(lat_edges=None, gap_edges=None) -> FeedforwardMap:
    if lat_edges is None or gap_edges is None:
        lat_edges, gap_edges = default_edges()
    return FeedforwardMap(
        lat_edges, gap_edges, np.zeros((len(lat_edges) - 1, len(gap_edges) - 1))
    )


def _interp_axis(centers: np.ndarray, x: float) -> tuple[int, int, float]:
    """Clamped linear interpolation weights on a center grid."""
    if x <= centers[0]:
        return 0, 0, 0.0
    if x >= centers[-1]:
        n = len(centers) - 1
        return n, n, 0.0
    j = int(np.searchsorted(centers, x)) - 1
    t = (x - centers[j]) / (centers[j + 1] - centers[j])
    return j, j + 1, float(t)


def feedforward_lookup(ff_map: FeedforwardMap, rel_pos: Vec3) -> float:
    """Feedforward thrust (N) for the given relative position of the
    upper vehicle (lower-to-upper). Zero outside the map support or when
    the upper vehicle is below."""
    gap = rel_pos[2]
    if gap < 0.0:
        return 0.0
    lateral = hypot(rel_pos[0], rel_pos[1])
    if lateral > ff_map.lat_edges[-1] or gap > ff_map.gap_edges[-1]:
        return 0.0
    i0, i1, ti = _interp_axis(ff_map._lat_centers, lateral)
    j0, j1, tj = _interp_axis(ff_map._gap_centers, gap)
    v = ff_map.values
    a = v[i0, j0] * (1.0 - tj) + v[i0, j1] * tj
    b = v[i1, j0] * (1.0 - tj) + v[i1, j1] * tj
    return float(a * (1.0 - ti) + b * ti)


def build_ff_map(
    telemetry, lat_edges=None, gap_edges=None
) -> FeedforwardMap:
    """Bin-average integral thrust offsets into a feedforward map.

    telemetry is an iterable of (rel_pos, integral_thrust_offset) pairs
    gathered while holding station at various relative separations.
    Cells with no samples stay zero; an all-empty input yields a zero
    map with a warning."""
    if lat_edges is None or gap_edges is None:
        lat_edges, gap_edges = default_edges()
    lat_edges = np.asarray(lat_edges, dtype=float)
    gap_edges = np.asarray(gap_edges, dtype=float)
    nl, ng = len(lat_edges) - 1, len(gap_edges) - 1
    total = np.zeros((nl, ng))
    count = np.zeros((nl, ng), dtype=int)
    for rel_pos, offset in telemetry:
        lateral = hypot(rel_pos[0], rel_pos[1])
        gap = rel_pos[2]
        if not (lat_edges[0] <= lateral <= lat_edges[-1]):
            continue
        if not (gap_edges[0] <= gap <= gap_edges[-1]):
            continue
        i = min(int(np.searchsorted(lat_edges, lateral, side="right")) - 1, nl - 1)
        j = min(int(np.searchsorted(gap_edges, gap, side="right")) - 1, ng - 1)
        total[i, j] += max(0.0, float(offset))
        count[i, j] += 1
    if not count.any():
        log.warning("no usable feedforward samples; returning a zero map")
        return zero_map(lat_edges, gap_edges)
    values = np.where(count > 0, total / np.maximum(count, 1), 0.0)
    return FeedforwardMap(lat_edges, gap_edges, values)


def map_from_model(model, upper_thrust: float, lat_edges=None, gap_edges=None) -> FeedforwardMap:
    """Feedforward map evaluated directly from a downwash model at bin
    centers: the converged result of the learn-from-integrals procedure."""
    from .aero import downwash_force

    if lat_edges is None or gap_edges is None:
        lat_edges, gap_edges = default_edges()
    m = zero_map(lat_edges, gap_edges)
    values = np.zeros_like(m.values)
    for i, lat in enumerate(m.lat_centers):
        for j, gap in enumerate(m.gap_centers):
            f = downwash_force(model, (float(lat), 0.0, float(gap)), upper_thrust)
            values[i, j] = -f[2]
    return FeedforwardMap(m.lat_edges, m.gap_edges, values)


def export_map_csv(ff_map: FeedforwardMap, path) -> None:
    # full precision so imported maps reproduce the lookup bit for bit
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# ff_map schema=1\n")
        fh.write("lat_edges," + ",".join(f"{x:.17g}" for x in ff_map.lat_edges) + "\n")
        fh.write("gap_edges," + ",".join(f"{x:.17g}" for x in ff_map.gap_edges) + "\n")
        for row in ff_map.values:
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


def import_map_csv(path) -> FeedforwardMap:
    with open(path, encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("# ff_map"):
        raise ControlError(f"{path} is not a feedforward map file")
    lat = np.array([float(x) for x in lines[1].split(",")[1:]])
    gap = np.array([float(x) for x in lines[2].split(",")[1:]])
    values = np.array([[float(x) for x in ln.split(",")] for ln in lines[3:]])
    return FeedforwardMap(lat, gap, values)
