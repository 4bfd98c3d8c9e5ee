"""Analytic jump reference generation.

References are built directly in force space and propagated through the
same forward-Euler model the controller uses, so the stance segments are
inverse-dynamics consistent by construction. The flight segment is exact
ballistics connecting the take-off state to the landing target.

Stance design:

- All-leg contact: the body crouches along a cubic height profile at zero
  pitch; the required wrench is distributed to the two feet by minimum-
  norm least squares.
- Rear-leg contact: a single foot cannot realize force and torque
  independently, so the force is directed along the foot-to-CoM line
  (zero body torque) plus a small perpendicular component realizing a
  sin^2 pitch bump that peaks mid-phase and levels off by take-off. The
  push amplitude and the rear anchor placement are solved with a damped
  Newton iteration so the Euler-propagated take-off state connects
  ballistically to the target.
- Landing (continuous jumping): both feet down, cubic deceleration back
  to the standing pose.

Swing legs follow hip-frame waypoint interpolations (lift-off pose, tuck,
touchdown pose); stance joints come from inverse kinematics of the
anchored feet.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .legs import LegGeometry, leg_ik
from .schedule import DT_CONTACT, Phase, PhaseSchedule, PhaseSegment, make_schedule
from .srbd import GRAVITY, NX, RigidBodyParams, discretize

TARGET_RANGE = (0.3, 0.8)


@dataclass(frozen=True)
class ReferenceConfig:
    standing_height: float = 0.28
    crouch_depth: float = 0.16        # crouch bottom = standing - crouch
    takeoff_height: float = 0.32      # CoM height at lift-off (and touchdown)
    pitch_peak: float = 0.08          # rad, bump apex during rear contact
    takeoff_speed_cap: float = 4.0    # m/s
    landing_duration: float = 0.3
    tuck_foot: tuple = (0.05, -0.16)  # hip-frame swing pose mid-flight
    mu: float = 0.6                   # feasibility warnings only
    f_max: float = 350.0


@dataclass
class JumpReference:
    times: np.ndarray          # (n,)
    states: np.ndarray         # (n, 7)
    feet: np.ndarray           # (n, 4) world frame, relative to CoM
    forces: np.ndarray         # (n, 4) applied over the transition starting at k
    joints: np.ndarray         # (n, 4)
    joint_vels: np.ndarray     # (n, 4)
    phases: list               # per-sample Phase of the outgoing transition
    schedule: PhaseSchedule
    anchors: np.ndarray        # (n, 4) absolute world foot anchors (nan while swinging)
    meta: dict = field(default_factory=dict)

    @property
    def n_samples(self) -> int:
        return len(self.times)

    def interp_joints(self, t: float):
        """Linear interpolation of the joint reference at an arbitrary time."""
        q = np.array([np.interp(t, self.times, self.joints[:, j]) for j in range(4)])
        qd = np.array([np.interp(t, self.times, self.joint_vels[:, j]) for j in range(4)])
        return q, qd

    def index_at(self, t: float) -> int:
        """Index of the sample at or immediately before time t."""
        return max(0, int(np.searchsorted(self.times, t + 1e-9)) - 1)


def _cubic(y0, y1, v0, v1, T):
    """Cubic with endpoint positions/velocities; returns (y, yd, ydd)."""
    a0, a1 = y0, v0
    a2 = (3 * (y1 - y0) - (2 * v0 + v1) * T) / T**2
    a3 = (-2 * (y1 - y0) + (v0 + v1) * T) / T**3
    return (lambda t: a0 + a1 * t + a2 * t * t + a3 * t**3,
            lambda t: a1 + 2 * a2 * t + 3 * a3 * t * t,
            lambda t: 2 * a2 + 6 * a3 * t)


def _smoothstep(s):
    s = np.clip(s, 0.0, 1.0)
    return 3 * s * s - 2 * s**3


def _min_norm_two_leg(f_total, tau, r1, r2):
    """Smallest-norm pair of foot forces realizing a body wrench."""
    M = np.zeros((3, 4))
    M[0, 0] = M[1, 1] = M[0, 2] = M[1, 3] = 1.0
    M[2, :] = [r1[1], -r1[0], r2[1], -r2[0]]
    w = np.array([f_total[0], f_total[1], tau])
    return M.T @ np.linalg.solve(M @ M.T, w)


def _rot(phi):
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, -s], [s, c]])


def _min_norm_accels(n: int, dt: float, dv: float, dz: float, v1: float) -> np.ndarray:
    """Smallest-norm per-step accelerations meeting discrete velocity and
    position targets under Euler integration.

    Solves min sum a_k^2 subject to dt*sum a_k = dv and
    dt^2*sum (n-1-k) a_k = dz - n*dt*v1; the optimum is an affine ramp.
    """
    w = (n - 1) - np.arange(n, dtype=float)
    b = np.array([dv / dt, (dz - n * dt * v1) / dt**2])
    Gm = np.array([[float(n), w.sum()], [w.sum(), (w * w).sum()]])
    lam = np.linalg.solve(Gm, b)
    return lam[0] + lam[1] * w


def _bump_accels(n: int, dt: float, peak: float, T: float) -> np.ndarray:
    """Per-step pitch accelerations whose Euler double integral tracks a
    sin^2 bump exactly on the sample grid (discrete second differences)."""
    t = np.arange(n + 2) * dt
    phi = peak * np.sin(np.pi * np.minimum(t, T) / T) ** 2
    return (phi[2:] - 2 * phi[1:-1] + phi[:-2]) / dt**2


def _stance_rollout(params, cfg, schedule, start, front_anchor, rear_anchor0,
                    v_x1, anchor_shift, a_rear, a_pitch):
    """Euler roll-out of the stance phases.

    All-leg contact crouches and builds the forward speed v_x1 (two feet
    share the friction budget). Rear contact applies the precomputed
    vertical acceleration ramp with the force directed through the CoM,
    plus a small perpendicular component realizing the pitch bump; the
    rear anchor placement (anchor_shift) governs the forward impulse.
    """
    m, J = params.m, params.J
    rear_anchor = rear_anchor0 + np.array([anchor_shift, 0.0])
    x = start.copy()
    times, states, forces, phases = [], [], [], []
    t = 0.0

    seg_ac = next((s for s in schedule.segments if s.phase is Phase.ALL_CONTACT), None)
    seg_rc = next((s for s in schedule.segments if s.phase is Phase.REAR_CONTACT), None)

    if seg_ac is not None:
        T1 = seg_ac.duration
        _, _, zdd = _cubic(x[1], x[1] - cfg.crouch_depth, 0.0, 0.0, T1)
        _, _, xdd = _cubic(x[0], x[0] + 0.5 * v_x1 * T1, 0.0, v_x1, T1)
        for k in range(seg_ac.steps):
            tk = k * seg_ac.dt
            f_tot = m * np.array([xdd(tk), zdd(tk) + GRAVITY])
            r1, r2 = front_anchor - x[:2], rear_anchor - x[:2]
            u = _min_norm_two_leg(f_tot, 0.0, r1, r2)
            times.append(t)
            states.append(x.copy())
            forces.append(u)
            phases.append(Phase.ALL_CONTACT)
            model = discretize(params, np.concatenate([r1, r2]), seg_ac.dt)
            x = model.A @ x + model.B @ u
            t += seg_ac.dt

    if seg_rc is not None:
        for k in range(seg_rc.steps):
            r2 = rear_anchor - x[:2]
            dist = np.linalg.norm(r2)
            e_push = -r2 / dist
            e_perp = np.array([-e_push[1], e_push[0]])
            # exact vertical tracking: solve the along-leg magnitude net of
            # the pitch term's vertical component; e_push[1] > 0
            c_perp = J * a_pitch[k] / dist
            magnitude = (m * (a_rear[k] + GRAVITY) - c_perp * e_perp[1]) / e_push[1]
            u_r = magnitude * e_push + c_perp * e_perp
            u = np.concatenate([np.zeros(2), u_r])
            times.append(t)
            states.append(x.copy())
            forces.append(u)
            phases.append(Phase.REAR_CONTACT)
            model = discretize(params, np.concatenate([np.zeros(2), r2]), seg_rc.dt)
            x = model.A @ x + model.B @ u
            t += seg_rc.dt

    return (np.array(times), np.array(states), np.array(forces), phases,
            x, t, rear_anchor)


def generate_reference(target_x: float, target_z: float = 0.0,
                       schedule: PhaseSchedule | None = None,
                       params: RigidBodyParams = RigidBodyParams(),
                       geom: LegGeometry = LegGeometry(),
                       cfg: ReferenceConfig = ReferenceConfig(),
                       start_x: float = 0.0) -> JumpReference:
    """Build a jump reference to a displacement target (meters).

    target_x is the forward CoM displacement at landing, target_z the
    landing terrain height (box jump). Raises when the required take-off
    speed exceeds the configured cap.
    """
    if target_z < 0.0:
        raise ValueError("target_z must be nonnegative")
    if target_x != 0.0 and not (TARGET_RANGE[0] <= target_x <= TARGET_RANGE[1]):
        warnings.warn(
            f"target_x {target_x} outside the standard range {TARGET_RANGE}", stacklevel=2)
    schedule = schedule or make_schedule()

    z0 = cfg.standing_height
    start = np.zeros(NX)
    start[0], start[1], start[6] = start_x, z0, GRAVITY

    front_anchor = np.array([start_x + geom.hip_x_front, 0.0])
    rear_anchor0 = np.array([start_x + geom.hip_x_rear, 0.0])
    seg_f = next((s for s in schedule.segments if s.phase is Phase.FLIGHT), None)
    T_f = seg_f.duration if seg_f is not None else 0.0
    target = np.array([start_x + target_x, z0 + target_z])

    # forward speed built in all-contact; rear stance only trims it
    seg_times = {s.phase: s.duration for s in schedule.segments}
    T1 = seg_times.get(Phase.ALL_CONTACT, 0.0)
    T2 = seg_times.get(Phase.REAR_CONTACT, 0.0)
    v_x1 = target_x / max(T_f + 0.5 * T1 + T2, 1e-9)

    def rollout(u_vec):
        return _stance_rollout(params, cfg, schedule, start, front_anchor,
                               rear_anchor0, v_x1, u_vec[0], u_vec[1])

    def residual(u_vec):
        *_, x_to, _, _ = rollout(u_vec)
        if T_f <= 0.0:
            return x_to[3:5]
        v_req = np.array([
            (target[0] - x_to[0]) / T_f,
            (target[1] - x_to[1] + 0.5 * GRAVITY * T_f**2) / T_f,
        ])
        return x_to[3:5] - v_req

    # unknowns: rear anchor placement and designed end vertical speed
    u_vec = np.array([0.5 * v_x1 * T2 + 0.02, 0.5 * GRAVITY * T_f])
    converged = False
    for _ in range(60):
        r0 = residual(u_vec)
        if np.linalg.norm(r0) < 1e-10:
            converged = True
            break
        Jac = np.zeros((2, 2))
        for j, h in enumerate((1e-5, 1e-5)):
            e = np.zeros(2)
            e[j] = h
            Jac[:, j] = (residual(u_vec + e) - r0) / h
        step = np.linalg.solve(Jac + 1e-12 * np.eye(2), -r0)
        u_vec = u_vec + np.clip(step, [-0.06, -0.5], [0.06, 0.5])
        u_vec[0] = np.clip(u_vec[0], -0.05, 0.3)
    if not converged:
        raise RuntimeError("take-off boundary solve did not converge")

    times_c, states_c, forces_c, phases_c, x_to, t_to, rear_anchor = rollout(u_vec)

    v_to = float(np.linalg.norm(x_to[3:5]))
    if v_to > cfg.takeoff_speed_cap:
        raise ValueError(
            f"target ({target_x}, {target_z}) needs take-off speed "
            f"{v_to:.2f} m/s, above the cap {cfg.takeoff_speed_cap} m/s")

    # flight samples: take-off instant plus the coarse ballistic grid
    flight_states = [x_to]
    flight_times = [t_to]
    if seg_f is not None:
        for k in range(1, seg_f.steps + 1):
            tau = k * seg_f.dt
            xk = x_to.copy()
            xk[0] = x_to[0] + x_to[3] * tau
            xk[1] = x_to[1] + x_to[4] * tau - 0.5 * GRAVITY * tau * tau
            xk[2] = x_to[2] + x_to[5] * tau
            xk[4] = x_to[4] - GRAVITY * tau
            flight_times.append(t_to + tau)
            flight_states.append(xk)

    times = np.concatenate([times_c, flight_times])
    states = np.vstack([states_c, flight_states])
    forces = np.vstack([forces_c, np.zeros((len(flight_times), 4))])
    phases = phases_c + [Phase.FLIGHT] * len(flight_times)

    n = len(times)
    anchors = np.full((n, 4), np.nan)
    anchors[:len(times_c), 0:2] = front_anchor
    mask_rc = np.array([p is Phase.REAR_CONTACT for p in phases_c])
    anchors[:len(times_c)][mask_rc, 0:2] = np.nan
    anchors[:len(times_c), 2:4] = rear_anchor
    t_land = t_to + T_f

    joints, joint_vels, feet = _leg_profiles(
        times, states, phases, anchors, geom, cfg, schedule, t_to, T_f, z0,
        front_anchor, rear_anchor)

    ref = JumpReference(times=times, states=states, feet=feet, forces=forces,
                        joints=joints, joint_vels=joint_vels, phases=phases,
                        schedule=schedule, anchors=anchors,
                        meta={"target_x": float(target_x), "target_z": float(target_z),
                              "takeoff_speed": v_to, "takeoff_time": float(t_to),
                              "landing_time": float(t_land),
                              "anchor_shift": float(u_vec[0]),
                              "v_z_takeoff_design": float(u_vec[1])})
    _check_force_feasibility(ref, cfg)
    return ref


def _leg_profiles(times, states, phases, anchors, geom, cfg, schedule, t_to, T_f, z0,
                  front_anchor, rear_anchor):
    """Joint/foot reference tables: IK on anchors in stance, waypoint
    interpolation in swing."""
    n = len(times)
    joints = np.zeros((n, 4))
    feet = np.zeros((n, 4))
    tuck = np.array(cfg.tuck_foot)
    land_pose = np.array([0.0, -z0])

    has_rc = any(p is Phase.REAR_CONTACT for p in phases)
    t_rc = schedule.time_of_phase(Phase.REAR_CONTACT) if has_rc else t_to

    # fixed hip-frame lift-off poses for the swing interpolation
    def hip_frame_pose(k, leg, anchor):
        xk = states[k]
        R = _rot(xk[2])
        hip = xk[:2] + R @ geom.hip_offset(leg)
        return R.T @ (anchor - hip)

    k_rc = int(np.searchsorted(times, t_rc - 1e-9))
    k_to = int(np.searchsorted(times, t_to - 1e-9))
    front_liftoff_pose = hip_frame_pose(min(k_rc, n - 1), 0, front_anchor)
    rear_liftoff_pose = hip_frame_pose(min(k_to, n - 1), 1, rear_anchor)

    def swing_pose(t, leg):
        if leg == 0:
            waypoints = [(t_rc, front_liftoff_pose), (t_to, tuck),
                         (t_to + 0.5 * T_f, tuck), (t_to + max(T_f, 1e-9), land_pose)]
        else:
            waypoints = [(t_to, rear_liftoff_pose), (t_to + 0.5 * T_f, tuck),
                         (t_to + max(T_f, 1e-9), land_pose)]
        if t <= waypoints[0][0]:
            return waypoints[0][1]
        for (ta, pa), (tb, pb) in zip(waypoints[:-1], waypoints[1:]):
            if t <= tb or tb == waypoints[-1][0]:
                w = _smoothstep((t - ta) / max(tb - ta, 1e-9))
                return (1 - w) * pa + w * pb
        return waypoints[-1][1]

    for k in range(n):
        xk = states[k]
        R = _rot(xk[2])
        for leg in (0, 1):
            hip_world = xk[:2] + R @ geom.hip_offset(leg)
            anchor = anchors[k, 2 * leg:2 * leg + 2]
            if np.all(np.isfinite(anchor)) and leg in phases[k].stance_legs:
                foot_world = anchor
            else:
                foot_world = hip_world + R @ swing_pose(times[k], leg)
            joints[k, 2 * leg:2 * leg + 2] = leg_ik(R.T @ (foot_world - hip_world), geom)
            feet[k, 2 * leg:2 * leg + 2] = foot_world - xk[:2]

    joint_vels = np.zeros((n, 4))
    for j in range(4):
        joint_vels[1:-1, j] = (joints[2:, j] - joints[:-2, j]) / (times[2:] - times[:-2])
        joint_vels[0, j] = (joints[1, j] - joints[0, j]) / (times[1] - times[0])
        joint_vels[-1, j] = (joints[-1, j] - joints[-2, j]) / (times[-1] - times[-2])
    return joints, joint_vels, feet


def _check_force_feasibility(ref: JumpReference, cfg: ReferenceConfig) -> None:
    for k, phase in enumerate(ref.phases[:-1]):
        u = ref.forces[k]
        for leg in (0, 1):
            fx, fz = u[2 * leg], u[2 * leg + 1]
            if leg not in phase.stance_legs:
                if abs(fx) > 1e-9 or abs(fz) > 1e-9:
                    warnings.warn(f"swing-leg force at sample {k}", stacklevel=2)
                continue
            if fz < -1e-9 or fz > cfg.f_max + 1e-9 or abs(fx) > cfg.mu * fz + 1e-9:
                warnings.warn(
                    f"reference force outside friction/limits at sample {k}: "
                    f"({fx:.1f}, {fz:.1f})", stacklevel=2)


def landing_bridge(x_land: np.ndarray, params: RigidBodyParams, geom: LegGeometry,
                   cfg: ReferenceConfig) -> JumpReference:
    """Landing-phase reference: decelerate to the standing pose."""
    m, J = params.m, params.J
    T = cfg.landing_duration
    steps = int(round(T / DT_CONTACT))
    z0 = cfg.standing_height

    # brake to rest a little ahead of the touchdown point
    x_stop = x_land[0] + x_land[3] * T * 0.25
    anchors = np.array([
        [x_stop + geom.hip_x_front, 0.0],
        [x_stop + geom.hip_x_rear, 0.0],
    ])
    xf, _, xfdd = _cubic(x_land[0], x_stop, x_land[3], 0.0, T)
    zf, _, zfdd = _cubic(x_land[1], z0, x_land[4], 0.0, T)
    pf, _, pfdd = _cubic(x_land[2], 0.0, x_land[5], 0.0, T)

    x = x_land.copy()
    times, states, forces = [], [], []
    t = 0.0
    for _ in range(steps):
        a_des = np.array([xfdd(t), zfdd(t)])
        r1, r2 = anchors[0] - x[:2], anchors[1] - x[:2]
        u = _min_norm_two_leg(m * (a_des + np.array([0.0, GRAVITY])), J * pfdd(t), r1, r2)
        times.append(t)
        states.append(x.copy())
        forces.append(u)
        model = discretize(params, np.concatenate([r1, r2]), DT_CONTACT)
        x = model.A @ x + model.B @ u
        t += DT_CONTACT
    times.append(t)
    states.append(x.copy())
    forces.append(np.zeros(4))

    n = len(times)
    phases = [Phase.LANDING] * n
    anchor_rows = np.tile(np.concatenate([anchors[0], anchors[1]]), (n, 1))
    joints = np.zeros((n, 4))
    feet = np.zeros((n, 4))
    for k in range(n):
        xk = states[k]
        R = _rot(xk[2])
        for leg in (0, 1):
            hip_world = xk[:2] + R @ geom.hip_offset(leg)
            joints[k, 2 * leg:2 * leg + 2] = leg_ik(R.T @ (anchors[leg] - hip_world), geom)
            feet[k, 2 * leg:2 * leg + 2] = anchors[leg] - xk[:2]
    jvels = np.zeros((n, 4))
    for j in range(4):
        jvels[1:-1, j] = (joints[2:, j] - joints[:-2, j]) / (2 * DT_CONTACT)

    sched = PhaseSchedule([PhaseSegment(Phase.LANDING, T, DT_CONTACT)])
    return JumpReference(np.array(times), np.array(states), feet, np.array(forces),
                         joints, jvels, phases, sched, anchor_rows)


def continuous_reference(n_jumps: int, target_x: float,
                         schedule: PhaseSchedule | None = None,
                         params: RigidBodyParams = RigidBodyParams(),
                         geom: LegGeometry = LegGeometry(),
                         cfg: ReferenceConfig = ReferenceConfig()) -> JumpReference:
    """Concatenate per-jump references bridged by landing phases."""
    if n_jumps < 1:
        raise ValueError("need at least one jump")
    schedule = schedule or make_schedule()

    chunks = []
    segs: list[PhaseSegment] = []
    x_off = 0.0
    t_off = 0.0
    for j in range(n_jumps):
        ref = generate_reference(target_x, 0.0, schedule, params, geom, cfg,
                                 start_x=x_off)
        bridge = landing_bridge(ref.states[-1], params, geom, cfg)
        # the jump's terminal sample duplicates the bridge's first sample
        chunks.append((ref, slice(0, ref.n_samples - 1), t_off))
        t_off += ref.times[-1]
        last = j == n_jumps - 1
        stop = bridge.n_samples if last else bridge.n_samples - 1
        chunks.append((bridge, slice(0, stop), t_off))
        t_off += bridge.times[-1]
        segs.extend(schedule.segments)
        segs.append(PhaseSegment(Phase.LANDING, cfg.landing_duration, DT_CONTACT))
        # next jump starts where the landing bridge came to rest
        x_off = bridge.states[-1][0]

    times = np.concatenate([r.times[s] + off for r, s, off in chunks])
    states = np.vstack([r.states[s] for r, s, _ in chunks])
    feet = np.vstack([r.feet[s] for r, s, _ in chunks])
    forces = np.vstack([r.forces[s] for r, s, _ in chunks])
    joints = np.vstack([r.joints[s] for r, s, _ in chunks])
    jvels = np.vstack([r.joint_vels[s] for r, s, _ in chunks])
    anchors = np.vstack([r.anchors[s] for r, s, _ in chunks])
    phases = []
    for r, s, _ in chunks:
        phases.extend(r.phases[s])

    return JumpReference(times, states, feet, forces, joints, jvels, phases,
                         PhaseSchedule(segs), anchors,
                         meta={"n_jumps": n_jumps, "target_x": float(target_x)})
