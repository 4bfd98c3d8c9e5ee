"""Planar single-rigid-body dynamics with adaptive-step discretization.

State layout (7 components, world frame):

    x = [p_x, p_z, phi, v_x, v_z, omega, g]

where (p_x, p_z) is the CoM position, phi the body pitch, (v_x, v_z)
the linear velocity, omega the pitch rate, and g the gravity constant
carried as a state component so the dynamics stay linear:

    x_{k+1} = A(dt) x_k + B(r, dt) u_k
    A(dt)   = I7 + A_ct * dt
    B(r,dt) = B_ct(r) * dt

Forces u = [u_f, u_r] are world-frame ground forces applied at the front
and rear feet, whose positions r = [r1, r2] are taken relative to the CoM.
A learned residual enters as an extra acceleration on the three velocity
components; positions feel it only through integration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

NX = 7  # state dimension
NU = 4  # input dimension (two 2D foot forces)

# state component indices
IPX, IPZ, IPHI, IVX, IVZ, IOM, IG = range(7)

# rows receiving residual accelerations (v_x, v_z, omega)
VEL_ROWS = (IVX, IVZ, IOM)

GRAVITY = 9.81


@dataclass(frozen=True)
class RigidBodyParams:
    """Lumped-body mass and pitch inertia."""

    m: float = 12.0
    J: float = 0.056

    def __post_init__(self):
        if self.m <= 0.0 or self.J <= 0.0:
            raise ValueError(f"mass and inertia must be positive, got m={self.m}, J={self.J}")


@dataclass
class RobotState:
    """Planar body state; `g` is constant along a trajectory."""

    p_x: float = 0.0
    p_z: float = 0.0
    phi: float = 0.0
    v_x: float = 0.0
    v_z: float = 0.0
    omega: float = 0.0
    g: float = GRAVITY

    def as_vector(self) -> np.ndarray:
        return np.array(
            [self.p_x, self.p_z, self.phi, self.v_x, self.v_z, self.omega, self.g]
        )

    @staticmethod
    def from_vector(x: np.ndarray) -> "RobotState":
        x = np.asarray(x, dtype=float).reshape(NX)
        return RobotState(*x)


@dataclass
class FootPositions:
    """Front/rear foot positions relative to the CoM, world frame."""

    r1: np.ndarray = field(default_factory=lambda: np.zeros(2))
    r2: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([np.asarray(self.r1, float), np.asarray(self.r2, float)])

    @staticmethod
    def from_vector(r: np.ndarray) -> "FootPositions":
        r = np.asarray(r, dtype=float).reshape(NU)
        return FootPositions(r[:2].copy(), r[2:].copy())


@dataclass
class ControlInput:
    """World-frame ground forces on the front and rear legs [N]."""

    u_f: np.ndarray = field(default_factory=lambda: np.zeros(2))
    u_r: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([np.asarray(self.u_f, float), np.asarray(self.u_r, float)])

    @staticmethod
    def from_vector(u: np.ndarray) -> "ControlInput":
        u = np.asarray(u, dtype=float).reshape(NU)
        return ControlInput(u[:2].copy(), u[2:].copy())


@dataclass(frozen=True)
class DiscreteModel:
    """One-step Euler model A = I + A_ct*dt, B = B_ct(r)*dt."""

    A: np.ndarray
    B: np.ndarray
    dt: float


def continuous_matrices(params: RigidBodyParams, feet: FootPositions | np.ndarray):
    """Continuous-time (A_ct, B_ct) for the planar SRBD.

    A_ct couples positions to velocities and injects -g into v_z via the
    gravity column. B_ct carries 1/m on the linear-velocity rows and the
    per-leg torque row [r_z, -r_x] / J (2D moment of a world-frame force
    about the CoM).
    """
    r = feet.as_vector() if isinstance(feet, FootPositions) else np.asarray(feet, float)
    A_ct = np.zeros((NX, NX))
    A_ct[IPX, IVX] = 1.0
    A_ct[IPZ, IVZ] = 1.0
    A_ct[IPHI, IOM] = 1.0
    A_ct[IVZ, IG] = -1.0

    B_ct = np.zeros((NX, NU))
    m, J = params.m, params.J
    B_ct[IVX, 0] = 1.0 / m
    B_ct[IVZ, 1] = 1.0 / m
    B_ct[IVX, 2] = 1.0 / m
    B_ct[IVZ, 3] = 1.0 / m
    r1x, r1z, r2x, r2z = r
    B_ct[IOM, 0] = r1z / J
    B_ct[IOM, 1] = -r1x / J
    B_ct[IOM, 2] = r2z / J
    B_ct[IOM, 3] = -r2x / J
    return A_ct, B_ct


def discretize(params: RigidBodyParams, feet: FootPositions | np.ndarray, dt: float) -> DiscreteModel:
    """Forward-Euler discretization of the SRBD at sampling interval dt."""
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    A_ct, B_ct = continuous_matrices(params, feet)
    return DiscreteModel(A=np.eye(NX) + A_ct * dt, B=B_ct * dt, dt=float(dt))


def nominal_step(model: DiscreteModel, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """One nominal step A x + B u. Gravity component passes through."""
    return model.A @ np.asarray(x, float) + model.B @ np.asarray(u, float)


def residual_step(
    model: DiscreteModel,
    x: np.ndarray,
    u: np.ndarray,
    h_val: np.ndarray,
    G_val: np.ndarray,
) -> np.ndarray:
    """Nominal step plus the learned correction (h + G u) * dt.

    h_val (3,) and G_val (3, 4) are already-evaluated network outputs;
    they act as extra accelerations on (v_x, v_z, omega) only.
    """
    u = np.asarray(u, float)
    x_next = nominal_step(model, x, u)
    accel = np.asarray(h_val, float) + np.asarray(G_val, float) @ u
    x_next[IVX:IOM + 1] += accel * model.dt
    return x_next


def torque_2d(r: np.ndarray, f: np.ndarray) -> float:
    """Planar moment of force f applied at offset r from the CoM.

    Independent sign oracle for the B_ct torque rows: the y-component of
    the 3D cross product with the plane embedded as (x, z).
    """
    return r[1] * f[0] - r[0] * f[1]
