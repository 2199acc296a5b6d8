"""Joint-space task controller over the isolated manipulator dynamics.

Every control tick stacks weighted task rows into a least-squares objective
over the joint accelerations, bounds the decision by torque limits (exact,
through the isolated inverse dynamics) and one-step joint-limit braking
rows, solves the resulting strictly convex QP, and maps the minimizer to
motor torques.  Soft weighted prioritization: balance outranks the
end-effector tasks, which outrank the damping regularization.

Infeasibility is handled by a fail-operational ladder instead of raising
inside the control loop: joint-limit rows are dropped first, then the task
stack is rescaled, and as a last resort clamped gravity compensation is
emitted with a flagged status.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import dynamics, isolation, qp
from .model import RobotDescription, RobotState

TASK_KINDS = ("com_angle", "ee_position", "ee_orientation", "regularization")


@dataclass(frozen=True)
class TaskSpec:
    """One weighted acceleration task.

    The reference law per row is
        acc_ref = desired_acc - kp (x - desired_pos) - kd (xdot - desired_vel)
    with gains broadcast per dimension.  desired_* left as None default to
    zero targets; the balance task instead pulls its targets from the
    high-level reference each tick.  joint_mask restricts which joint
    columns the task may use (the ablation study zeroes all but the first).
    """

    kind: str
    weight: float
    kp: float | np.ndarray = 0.0
    kd: float | np.ndarray = 0.0
    desired_pos: np.ndarray | float | None = None
    desired_vel: np.ndarray | float | None = None
    desired_acc: np.ndarray | float | None = None
    joint_mask: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in TASK_KINDS:
            raise ValueError(f"unknown task kind {self.kind!r}")
        if self.weight < 0:
            raise ValueError("task weight must be nonnegative")
        if np.any(np.asarray(self.kp) < 0) or np.any(np.asarray(self.kd) < 0):
            raise ValueError("task gains must be nonnegative")


@dataclass(frozen=True)
class WbcConfig:
    period: float = 1e-3          # tick length for joint-limit braking
    joint_margin: float = 0.05    # rad kept clear of hard stops
    fallback_task_scale: float = 1e-3
    qp_max_iter: int = 200


@dataclass(frozen=True)
class WbcOutput:
    qddot: np.ndarray
    torques: np.ndarray
    task_errors: dict
    qp_status: str                # optimal | no_joint_rows | rescaled | fallback
    active_constraints: list
    iterations: int
    heading_accel: float


@dataclass(frozen=True)
class BalanceReference:
    """Targets for the balance task, refreshed by the high-level loop."""

    theta: float = 0.0
    thetadot: float = 0.0
    theta_ddot: float = 0.0

    @classmethod
    def from_mpc(cls, out) -> "BalanceReference":
        """Adapt a high-level controller output (theta_ref, thetadot_ref,
        theta_ddot_ref attributes)."""
        return cls(theta=out.theta_ref, thetadot=out.thetadot_ref,
                   theta_ddot=out.theta_ddot_ref)


def task_geometry(desc: RobotDescription, s: RobotState, kind: str):
    """Task map pieces: (J, Jdot_qdot, value, velocity) for one task kind.

    The balance coordinate is the inclination of the total center of mass
    about the axle; end-effector rows are expressed axle-relative, so a
    held position target means held relative to the moving base.
    """
    n = desc.n
    if kind == "com_angle":
        com = dynamics.com_state(desc, s)
        X, Z, L = com.x_com, com.z_com, com.length
        Jrow = (Z * com.J[0] - X * com.J[1]) / (L * L)
        vx, vz = com.J @ s.qdot
        ldot = (X * vx + Z * vz) / L
        jdq = (Z * com.Jdot_qdot[0] - X * com.Jdot_qdot[1]) / (L * L) \
            - 2.0 * com.thetadot * ldot / L
        return (Jrow.reshape(1, n), np.array([jdq]),
                np.array([com.theta]), np.array([com.thetadot]))
    if kind == "ee_position":
        ee = dynamics.ee_state(desc, s)
        return ee.J, ee.Jdot_qdot, ee.pos, ee.vel
    if kind == "ee_orientation":
        J = np.ones((1, n))
        return (J, np.zeros(1), np.array([float(np.sum(s.q))]),
                np.array([float(np.sum(s.qdot))]))
    if kind == "regularization":
        return np.eye(n), np.zeros(n), s.q.copy(), s.qdot.copy()
    raise ValueError(f"unknown task kind {kind!r}")


def default_tasks(desc: RobotDescription, s0: RobotState,
                  balance_weight: float = 100.0,
                  ee_weight: float = 10.0,
                  reg_weight: float = 0.1) -> list[TaskSpec]:
    """Standard stack: balance, hold the initial end-effector pose
    (axle-relative), damp everything else."""
    ee0 = dynamics.ee_state(desc, s0)
    return [
        TaskSpec(kind="com_angle", weight=balance_weight, kp=400.0, kd=40.0),
        TaskSpec(kind="ee_position", weight=ee_weight, kp=50.0, kd=14.0,
                 desired_pos=ee0.pos.copy()),
        TaskSpec(kind="ee_orientation", weight=ee_weight, kp=50.0, kd=14.0,
                 desired_pos=float(np.sum(s0.q))),
        TaskSpec(kind="regularization", weight=reg_weight, kd=1.0),
    ]


def decoupled_tasks(desc: RobotDescription, s0: RobotState,
                    balance_weight: float = 100.0,
                    posture_weight: float = 10.0) -> list[TaskSpec]:
    """Ablation stack: balance allowed to use only the first joint, arm
    joints held at their initial angles by plain PD rows, no end-effector
    coordination."""
    n = desc.n
    balance_mask = np.zeros(n, dtype=bool)
    balance_mask[0] = True
    arm_mask = ~balance_mask
    tasks = [TaskSpec(kind="com_angle", weight=balance_weight,
                      kp=400.0, kd=40.0, joint_mask=balance_mask)]
    if n > 1:
        tasks.append(TaskSpec(kind="regularization", weight=posture_weight,
                              kp=400.0, kd=40.0, desired_pos=s0.q.copy(),
                              joint_mask=arm_mask))
    tasks.append(TaskSpec(kind="regularization", weight=0.1, kd=1.0))
    return tasks


def _as_vec(val, rows: int) -> np.ndarray:
    if val is None:
        return np.zeros(rows)
    return np.broadcast_to(np.asarray(val, dtype=float), (rows,)).copy()


def _stack_tasks(desc: RobotDescription, s: RobotState,
                 tasks: list[TaskSpec], ref: BalanceReference):
    """(P, b, per-task position errors) for the weighted stack."""
    n = desc.n
    P_rows = []
    b_vals = []
    errors = {}
    for t in tasks:
        J, jdq, val, vel = task_geometry(desc, s, t.kind)
        rows = J.shape[0]
        if t.kind == "com_angle":
            pos_d = _as_vec(ref.theta, rows)
            vel_d = _as_vec(ref.thetadot, rows)
            acc_d = _as_vec(ref.theta_ddot, rows)
        else:
            pos_d = _as_vec(t.desired_pos, rows) \
                if t.desired_pos is not None else val.copy()
            vel_d = _as_vec(t.desired_vel, rows)
            acc_d = _as_vec(t.desired_acc, rows)
        kp = np.broadcast_to(np.asarray(t.kp, dtype=float), (rows,))
        kd = np.broadcast_to(np.asarray(t.kd, dtype=float), (rows,))
        acc_ref = acc_d - kp * (val - pos_d) - kd * (vel - vel_d)
        if t.joint_mask is not None:
            J = J * np.asarray(t.joint_mask, dtype=float)
        P_rows.append(t.weight * J)
        b_vals.append(t.weight * (acc_ref - jdq))
        err = float(np.linalg.norm(val - pos_d))
        errors[t.kind] = max(errors.get(t.kind, 0.0), err)
    return np.vstack(P_rows), np.concatenate(b_vals), errors


def _joint_limit_rows(desc: RobotDescription, s: RobotState,
                      cfg: WbcConfig):
    """One-step braking bounds: accelerations that keep each joint clear
    of its stops after one tick of constant acceleration."""
    n = desc.n
    rows = []
    vals = []
    coef = 2.0 / (cfg.period * cfg.period)
    for j, link in enumerate(desc.links):
        if np.isfinite(link.angle_min):
            lb = coef * (link.angle_min + cfg.joint_margin
                         - s.q[j] - cfg.period * s.qdot[j])
            row = np.zeros(n)
            row[j] = -1.0
            rows.append(row)
            vals.append(lb)
        if np.isfinite(link.angle_max):
            ub = coef * (link.angle_max - cfg.joint_margin
                         - s.q[j] - cfg.period * s.qdot[j])
            row = np.zeros(n)
            row[j] = 1.0
            rows.append(row)
            vals.append(-ub)
    if not rows:
        return np.zeros((0, n)), np.zeros(0)
    return np.vstack(rows), np.array(vals)


def control_step(desc: RobotDescription, s: RobotState,
                 tasks: list[TaskSpec], ref: BalanceReference,
                 cfg: WbcConfig | None = None,
                 warm_active: list | None = None) -> WbcOutput:
    """One controller tick: weighted task QP over joint accelerations.

    Torque limits enter exactly through the isolated dynamics rows; the
    returned torques realize the optimal accelerations bias-consistently,
    so replaying them through the full forward dynamics reproduces qddot.
    """
    if not tasks:
        raise ValueError("task list must be nonempty")
    if cfg is None:
        cfg = WbcConfig()
    terms = dynamics.dynamics_terms(desc, s)
    iso = isolation.isolate(terms, desc.wheel.radius)
    limits = desc.torque_limits()

    P, b, errors = _stack_tasks(desc, s, tasks, ref)
    C_tq, c_tq = isolation.torque_constraint_rows(iso, limits)
    C_jl, c_jl = _joint_limit_rows(desc, s, cfg)

    G = P.T @ P
    g = -P.T @ b

    def attempt(C_I, c_I, scale):
        problem = qp.QpProblem(G=scale * scale * G, g=scale * scale * g,
                               C_I=C_I if C_I.shape[0] else None,
                               c_I=c_I if C_I.shape[0] else None)
        return qp.solve_qp(problem, active0=warm_active,
                           max_iter=cfg.qp_max_iter)

    C_all = np.vstack((C_tq, C_jl))
    c_all = np.concatenate((c_tq, c_jl))
    sol = attempt(C_all, c_all, 1.0)
    status = "optimal"
    if not sol.ok:
        sol = attempt(C_tq, c_tq, 1.0)
        status = "no_joint_rows"
    if not sol.ok:
        sol = attempt(C_tq, c_tq, cfg.fallback_task_scale)
        status = "rescaled"
    if sol.ok:
        qddot = sol.x
        torques = isolation.inverse_dynamics(iso, qddot)
        active = sol.active
        iterations = sol.iterations
    else:
        # last resort: stay upright on gravity compensation alone
        status = "fallback"
        torques = np.clip(iso.bias, -limits, limits)
        qddot = isolation.forward_joint_dynamics(iso, torques)
        active = []
        iterations = 0
    heading = isolation.heading_acceleration(iso, qddot, float(torques[0]))
    return WbcOutput(qddot=qddot, torques=torques, task_errors=errors,
                     qp_status=status, active_constraints=active,
                     iterations=iterations, heading_accel=heading)
