"""Rigid-body vehicle dynamics, docked-pair composition, and contact analysis.

World frame is z-up with gravity 9.81 m/s^2. States use SI units
throughout. The docked pair is treated as a single rigid body while
engaged; the contact normal/friction solution is evaluated
diagnostically from the zero-relative-acceleration condition:

    normal   = m_fb * f_T / (m_m + m_fb)
    friction = m_fb * f_ext_planar / (m_m + m_fb)

with f_T the host's total thrust along its body z axis and f_ext_planar
an external force in the platform plane. Rotary coupling between the
bodies is neglected.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import isfinite

import numpy as np

from .geom import (
    Quat,
    Vec3,
    QUAT_IDENTITY,
    VEC3_ZERO,
    q_normalize,
    quat,
    vec3,
)

GRAVITY = 9.81


class DynamicsError(ValueError):
    """Raised for invalid dynamic states or parameters."""


@dataclass(frozen=True)
class RigidBodyState:
    """State of one vehicle: position/velocity in the world frame,
    attitude as a unit body-to-world quaternion, angular velocity in the
    body frame."""

    position: Vec3 = VEC3_ZERO
    velocity: Vec3 = VEC3_ZERO
    attitude: Quat = QUAT_IDENTITY
    angular_velocity: Vec3 = VEC3_ZERO

    def __post_init__(self):
        object.__setattr__(self, "position", vec3(self.position))
        object.__setattr__(self, "velocity", vec3(self.velocity))
        object.__setattr__(self, "attitude", quat(self.attitude))
        object.__setattr__(self, "angular_velocity", vec3(self.angular_velocity))

    def validate(self) -> None:
        for name in ("position", "velocity", "attitude", "angular_velocity"):
            if not all(isfinite(c) for c in getattr(self, name)):
                raise DynamicsError(f"non-finite {name}: {getattr(self, name)}")
        n = sum(c * c for c in self.attitude)
        if abs(n - 1.0) > 1.0e-6:
            raise DynamicsError(f"attitude norm {n**0.5:.9f} is not unit")

    def renormalized(self) -> "RigidBodyState":
        return RigidBodyState(
            self.position, self.velocity, q_normalize(self.attitude), self.angular_velocity
        )


@dataclass
class VehicleParams:
    """Physical parameters of one quadcopter.

    k_p is the powertrain constant relating hover electric power to
    total_mass**1.5 (W / kg^1.5); inertia is a symmetric positive
    definite 3x3 matrix in body axes (kg m^2).
    """

    mass: float
    arm_length: float
    prop_diameter: float
    max_thrust: float
    inertia: np.ndarray
    k_p: float

    def __post_init__(self):
        self.inertia = np.asarray(self.inertia, dtype=float)
        if self.mass <= 0.0:
            raise DynamicsError(f"mass must be positive, got {self.mass}")
        if self.max_thrust <= self.mass * GRAVITY:
            raise DynamicsError(
                f"max_thrust {self.max_thrust} N cannot hover a {self.mass} kg vehicle"
            )
        if self.inertia.shape != (3, 3):
            raise DynamicsError("inertia must be a 3x3 matrix")
        if not np.allclose(self.inertia, self.inertia.T, atol=1.0e-12):
            raise DynamicsError("inertia must be symmetric")
        if np.any(np.linalg.eigvalsh(self.inertia) <= 0.0):
            raise DynamicsError("inertia must be positive definite")


@dataclass(frozen=True)
class Wrench:
    """Applied force in the world frame and torque in the body frame.

    Gravity is not part of the wrench; the integrator applies it."""

    force: Vec3 = VEC3_ZERO
    torque: Vec3 = VEC3_ZERO

    def __post_init__(self):
        object.__setattr__(self, "force", vec3(self.force))
        object.__setattr__(self, "torque", vec3(self.torque))

    def validate(self) -> None:
        if not all(isfinite(c) for c in self.force):
            raise DynamicsError(f"non-finite wrench force: {self.force}")
        if not all(isfinite(c) for c in self.torque):
            raise DynamicsError(f"non-finite wrench torque: {self.torque}")


@dataclass(frozen=True)
class ContactSolution:
    """Docked-contact requirement for zero relative acceleration.

    normal_force is along the host body z axis, positive pressing the
    legs into the platform; required_friction is the in-plane force
    magnitude the mechanism must supply."""

    normal_force: float
    required_friction: float
    engaged: bool


# --------------------------------------------------------------------------
# Fast flat-state integrator core (shared with the simulation engine)
# --------------------------------------------------------------------------

State13 = tuple  # (px,py,pz, vx,vy,vz, qw,qx,qy,qz, wx,wy,wz)


def state_to_flat(s: RigidBodyState) -> State13:
    return s.position + s.velocity + s.attitude + s.angular_velocity


def flat_to_state(f: State13) -> RigidBodyState:
    return RigidBodyState(f[0:3], f[3:6], f[6:10], f[10:13])


def inertia_rows(inertia: np.ndarray):
    """Inertia and its inverse as flat row tuples for the unrolled core."""
    inv = np.linalg.inv(inertia)
    i = tuple(float(x) for x in inertia.reshape(-1))
    j = tuple(float(x) for x in inv.reshape(-1))
    return i, j


def rk4_flat(s, dt, inv_mass, ii, jj, fx, fy, fz, tx, ty, tz) -> State13:
    """One fixed step with the wrench held constant over the step.

    The rotational states (quaternion, body rates) take a classical RK4
    step (stages unrolled; this is the 1 kHz hot path); under a
    zero-order-hold force the translational RK4 stages collapse to the
    exact constant-acceleration update, which is applied in closed form.
    The attitude is renormalized after the combine."""
    ax = fx * inv_mass
    ay = fy * inv_mass
    az = fz * inv_mass - GRAVITY
    px, py, pz, vx, vy, vz = s[0], s[1], s[2], s[3], s[4], s[5]
    qw, qx, qy, qz, wx, wy, wz = s[6], s[7], s[8], s[9], s[10], s[11], s[12]

    half_dt2 = 0.5 * dt * dt
    npx = px + vx * dt + ax * half_dt2
    npy = py + vy * dt + ay * half_dt2
    npz = pz + vz * dt + az * half_dt2
    nvx = vx + ax * dt
    nvy = vy + ay * dt
    nvz = vz + az * dt

    i0, i1, i2, i3, i4, i5, i6, i7, i8 = ii
    j0, j1, j2, j3, j4, j5, j6, j7, j8 = jj

    # stage 1
    lx = i0 * wx + i1 * wy + i2 * wz
    ly = i3 * wx + i4 * wy + i5 * wz
    lz = i6 * wx + i7 * wy + i8 * wz
    mx = tx - (wy * lz - wz * ly)
    my = ty - (wz * lx - wx * lz)
    mz = tz - (wx * ly - wy * lx)
    a_qw = 0.5 * (-qx * wx - qy * wy - qz * wz)
    a_qx = 0.5 * (qw * wx + qy * wz - qz * wy)
    a_qy = 0.5 * (qw * wy - qx * wz + qz * wx)
    a_qz = 0.5 * (qw * wz + qx * wy - qy * wx)
    a_wx = j0 * mx + j1 * my + j2 * mz
    a_wy = j3 * mx + j4 * my + j5 * mz
    a_wz = j6 * mx + j7 * my + j8 * mz

    # stage 2
    h = 0.5 * dt
    sqw = qw + h * a_qw
    sqx = qx + h * a_qx
    sqy = qy + h * a_qy
    sqz = qz + h * a_qz
    swx = wx + h * a_wx
    swy = wy + h * a_wy
    swz = wz + h * a_wz
    lx = i0 * swx + i1 * swy + i2 * swz
    ly = i3 * swx + i4 * swy + i5 * swz
    lz = i6 * swx + i7 * swy + i8 * swz
    mx = tx - (swy * lz - swz * ly)
    my = ty - (swz * lx - swx * lz)
    mz = tz - (swx * ly - swy * lx)
    b_qw = 0.5 * (-sqx * swx - sqy * swy - sqz * swz)
    b_qx = 0.5 * (sqw * swx + sqy * swz - sqz * swy)
    b_qy = 0.5 * (sqw * swy - sqx * swz + sqz * swx)
    b_qz = 0.5 * (sqw * swz + sqx * swy - sqy * swx)
    b_wx = j0 * mx + j1 * my + j2 * mz
    b_wy = j3 * mx + j4 * my + j5 * mz
    b_wz = j6 * mx + j7 * my + j8 * mz

    # stage 3
    sqw = qw + h * b_qw
    sqx = qx + h * b_qx
    sqy = qy + h * b_qy
    sqz = qz + h * b_qz
    swx = wx + h * b_wx
    swy = wy + h * b_wy
    swz = wz + h * b_wz
    lx = i0 * swx + i1 * swy + i2 * swz
    ly = i3 * swx + i4 * swy + i5 * swz
    lz = i6 * swx + i7 * swy + i8 * swz
    mx = tx - (swy * lz - swz * ly)
    my = ty - (swz * lx - swx * lz)
    mz = tz - (swx * ly - swy * lx)
    c_qw = 0.5 * (-sqx * swx - sqy * swy - sqz * swz)
    c_qx = 0.5 * (sqw * swx + sqy * swz - sqz * swy)
    c_qy = 0.5 * (sqw * swy - sqx * swz + sqz * swx)
    c_qz = 0.5 * (sqw * swz + sqx * swy - sqy * swx)
    c_wx = j0 * mx + j1 * my + j2 * mz
    c_wy = j3 * mx + j4 * my + j5 * mz
    c_wz = j6 * mx + j7 * my + j8 * mz

    # stage 4
    sqw = qw + dt * c_qw
    sqx = qx + dt * c_qx
    sqy = qy + dt * c_qy
    sqz = qz + dt * c_qz
    swx = wx + dt * c_wx
    swy = wy + dt * c_wy
    swz = wz + dt * c_wz
    lx = i0 * swx + i1 * swy + i2 * swz
    ly = i3 * swx + i4 * swy + i5 * swz
    lz = i6 * swx + i7 * swy + i8 * swz
    mx = tx - (swy * lz - swz * ly)
    my = ty - (swz * lx - swx * lz)
    mz = tz - (swx * ly - swy * lx)
    d_qw = 0.5 * (-sqx * swx - sqy * swy - sqz * swz)
    d_qx = 0.5 * (sqw * swx + sqy * swz - sqz * swy)
    d_qy = 0.5 * (sqw * swy - sqx * swz + sqz * swx)
    d_qz = 0.5 * (sqw * swz + sqx * swy - sqy * swx)
    d_wx = j0 * mx + j1 * my + j2 * mz
    d_wy = j3 * mx + j4 * my + j5 * mz
    d_wz = j6 * mx + j7 * my + j8 * mz

    sixth = dt / 6.0
    nqw = qw + sixth * (a_qw + 2.0 * (b_qw + c_qw) + d_qw)
    nqx = qx + sixth * (a_qx + 2.0 * (b_qx + c_qx) + d_qx)
    nqy = qy + sixth * (a_qy + 2.0 * (b_qy + c_qy) + d_qy)
    nqz = qz + sixth * (a_qz + 2.0 * (b_qz + c_qz) + d_qz)
    nwx = wx + sixth * (a_wx + 2.0 * (b_wx + c_wx) + d_wx)
    nwy = wy + sixth * (a_wy + 2.0 * (b_wy + c_wy) + d_wy)
    nwz = wz + sixth * (a_wz + 2.0 * (b_wz + c_wz) + d_wz)
    qn = (nqw * nqw + nqx * nqx + nqy * nqy + nqz * nqz) ** 0.5
    # a collapsed norm means the state already blew up; propagate NaN to
    # the engine's finite checks instead of dividing by zero
    inv = 1.0 / qn if qn > 0.0 else float("nan")
    return (
        npx, npy, npz, nvx, nvy, nvz,
        nqw * inv, nqx * inv, nqy * inv, nqz * inv,
        nwx, nwy, nwz,
    )


# --------------------------------------------------------------------------
# Public operations
# --------------------------------------------------------------------------


def step_rigid_body(
    state: RigidBodyState, params: VehicleParams, wrench: Wrench, dt: float
) -> RigidBodyState:
    """Advance one vehicle by one fixed RK4 step of length dt.

    The wrench force is world-frame and excludes gravity, which the
    integrator adds; torque is body-frame. Attitude is renormalized."""
    if dt <= 0.0:
        raise DynamicsError(f"dt must be positive, got {dt}")
    state.validate()
    wrench.validate()
    ii, jj = inertia_rows(params.inertia)
    flat = rk4_flat(
        state_to_flat(state),
        dt,
        1.0 / params.mass,
        ii,
        jj,
        wrench.force[0],
        wrench.force[1],
        wrench.force[2],
        wrench.torque[0],
        wrench.torque[1],
        wrench.torque[2],
    )
    return flat_to_state(flat)


def composite_params(
    main: VehicleParams, fb: VehicleParams, mount_offset: Vec3
) -> VehicleParams:
    """Parameters of the rigidly docked pair, about the combined center
    of mass.

    mount_offset points from the host's center of mass to the docked
    vehicle's center of mass, in host body axes. Thrust limits and the
    powertrain constant stay those of the host (its rotors do the work)."""
    off = np.asarray(vec3(mount_offset))
    m_m, m_fb = main.mass, fb.mass
    total = m_m + m_fb
    d_com = off * (m_fb / total)  # host COM -> combined COM
    d_main = -d_com
    d_fb = off - d_com

    def parallel_axis(m: float, d: np.ndarray) -> np.ndarray:
        return m * (float(d @ d) * np.eye(3) - np.outer(d, d))

    inertia = main.inertia + parallel_axis(m_m, d_main) + fb.inertia + parallel_axis(m_fb, d_fb)
    return VehicleParams(
        mass=total,
        arm_length=main.arm_length,
        prop_diameter=main.prop_diameter,
        max_thrust=main.max_thrust,
        inertia=inertia,
        k_p=main.k_p,
    )


def composite_com_offset(main_mass: float, fb_mass: float, mount_offset: Vec3) -> Vec3:
    """Offset from the host COM to the combined COM, host body axes."""
    s = fb_mass / (main_mass + fb_mass)
    return (mount_offset[0] * s, mount_offset[1] * s, mount_offset[2] * s)


def contact_forces(
    main_mass: float, fb_mass: float, thrust: float, external_planar_force: float = 0.0
) -> ContactSolution:
    """Normal force and required friction for the docked pair to
    co-accelerate, given the host thrust (along its body z) and an
    external platform-plane force magnitude acting on the host.

    Negative thrust would make the required normal force tensile, which
    the passive mechanism cannot supply: the solution reports the pair
    disengaged in that case."""
    if main_mass <= 0.0 or fb_mass <= 0.0:
        raise DynamicsError("masses must be positive")
    ratio = fb_mass / (main_mass + fb_mass)
    normal = ratio * thrust
    friction = ratio * abs(external_planar_force)
    return ContactSolution(
        normal_force=normal, required_friction=friction, engaged=normal >= 0.0
    )


def contact_retained(contact: ContactSolution, mu: float) -> bool:
    """True when dry friction with coefficient mu can hold the docked
    pair together for this contact solution."""
    if mu < 0.0:
        raise DynamicsError(f"mu must be non-negative, got {mu}")
    return contact.engaged and contact.required_friction <= mu * contact.normal_force
