"""Planar two-link leg kinematics, Jacobians, and force/torque maps.

Joint convention per leg: q = (hip, knee), hip angle measured from the
straight-down direction, knee angle relative to the upper link. With both
angles zero the leg points straight down, so the foot sits at
(0, -(l1 + l2)) in the hip frame. Foot positions are expressed in the hip
frame; callers compose with the hip offset and the body rotation R(phi)
to reach world coordinates.

Joint ordering across the robot: [front_hip, front_knee, rear_hip, rear_knee].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SINGULARITY_DET = 1e-6
DLS_DAMPING = 1e-4


@dataclass(frozen=True)
class LegGeometry:
    """Link lengths and hip placement relative to the CoM (body frame)."""

    l1: float = 0.2
    l2: float = 0.2
    hip_x_front: float = 0.183
    hip_x_rear: float = -0.183
    knee_sign: int = 1  # IK branch: +1 bends the knee backward

    @property
    def reach(self) -> float:
        return self.l1 + self.l2

    def hip_offset(self, leg: int) -> np.ndarray:
        return np.array([self.hip_x_front if leg == 0 else self.hip_x_rear, 0.0])


@dataclass
class LegState:
    """Joint angles and velocities for both legs."""

    q_J: np.ndarray = field(default_factory=lambda: np.zeros(4))
    qd_J: np.ndarray = field(default_factory=lambda: np.zeros(4))


def leg_fk(q_hip: float, q_knee: float, geom: LegGeometry = LegGeometry()) -> np.ndarray:
    """Foot position in the hip frame."""
    s1, c1 = np.sin(q_hip), np.cos(q_hip)
    s12, c12 = np.sin(q_hip + q_knee), np.cos(q_hip + q_knee)
    return np.array([geom.l1 * s1 + geom.l2 * s12, -(geom.l1 * c1 + geom.l2 * c12)])


def leg_jacobian(q_hip: float, q_knee: float, geom: LegGeometry = LegGeometry()) -> np.ndarray:
    """Analytic d(foot)/d(q); det = l1*l2*sin(q_knee)."""
    s1, c1 = np.sin(q_hip), np.cos(q_hip)
    s12, c12 = np.sin(q_hip + q_knee), np.cos(q_hip + q_knee)
    return np.array([
        [geom.l1 * c1 + geom.l2 * c12, geom.l2 * c12],
        [geom.l1 * s1 + geom.l2 * s12, geom.l2 * s12],
    ])


def is_singular(q_hip: float, q_knee: float, geom: LegGeometry = LegGeometry()) -> bool:
    J = leg_jacobian(q_hip, q_knee, geom)
    return abs(J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]) < SINGULARITY_DET


def leg_ik(foot: np.ndarray, geom: LegGeometry = LegGeometry()) -> np.ndarray:
    """Closed-form inverse kinematics on the configured knee branch.

    Raises for targets outside the annulus the leg can reach.
    """
    x, z = float(foot[0]), float(foot[1])
    d2 = x * x + z * z
    l1, l2 = geom.l1, geom.l2
    c_knee = (d2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)
    if c_knee > 1.0 + 1e-12 or c_knee < -1.0 - 1e-12:
        raise ValueError(f"foot target {foot} outside leg reach")
    q_knee = geom.knee_sign * np.arccos(np.clip(c_knee, -1.0, 1.0))
    q_hip = np.arctan2(x, -z) - np.arctan2(l2 * np.sin(q_knee), l1 + l2 * np.cos(q_knee))
    return np.array([q_hip, q_knee])


def rotation(phi: float) -> np.ndarray:
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, -s], [s, c]])


def pd_torque(q_ref: np.ndarray, qd_ref: np.ndarray, q: np.ndarray, qd: np.ndarray,
              kp: np.ndarray, kd: np.ndarray) -> np.ndarray:
    """Joint PD law Kp (q* - q) + Kd (qd* - qd) with diagonal gains."""
    kp = np.asarray(kp, float)
    kd = np.asarray(kd, float)
    if np.any(kp < 0.0) or np.any(kd < 0.0):
        raise ValueError("PD gains must be nonnegative")
    return kp * (np.asarray(q_ref, float) - np.asarray(q, float)) + \
        kd * (np.asarray(qd_ref, float) - np.asarray(qd, float))


def force_to_torque(force_world: np.ndarray, q_leg: np.ndarray, phi: float,
                    geom: LegGeometry = LegGeometry()) -> np.ndarray:
    """Joint torque equivalent of a world-frame foot force: J^T R^T f."""
    J = leg_jacobian(q_leg[0], q_leg[1], geom)
    return J.T @ rotation(phi).T @ np.asarray(force_world, float)


def torque_to_force(tau_leg: np.ndarray, q_leg: np.ndarray, phi: float,
                    geom: LegGeometry = LegGeometry()):
    """World-frame foot force realizing a joint torque pair.

    Solves the 2x2 system (J^T R^T) u = tau; near singularity falls back
    to a damped inverse and flags the sample.

    Returns (force, singular_flag).
    """
    J = leg_jacobian(q_leg[0], q_leg[1], geom)
    M = J.T @ rotation(phi).T
    tau = np.asarray(tau_leg, float)
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    if abs(det) >= SINGULARITY_DET:
        return np.linalg.solve(M, tau), False
    u = np.linalg.solve(M.T @ M + DLS_DAMPING * np.eye(2), M.T @ tau)
    return u, True
