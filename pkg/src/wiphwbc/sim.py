"""Fixed-step plant integration and the two-rate closed-loop runner.

The plant is integrated with classical RK4 under zero-order-hold torques.
Control runs at two rates: the receding-horizon layer refreshes the
balance reference every outer period, the task controller recomputes
torques every inner tick, and the physics stepper advances underneath
both.  Scheduling is by integer step counters, so identical configs give
bit-identical logs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import wbc as wbc_mod
from .dynamics import (DegenerateConfigError, com_state, ee_state,
                       forward_dynamics, total_energy)
from .mpc import MpcConfig, MpcController, make_reference
from .model import RobotDescription, RobotState, upright_rest
from .wipm import extract_params

__all__ = ["integrate_step", "rollout", "SimConfig", "ControllerConfig",
           "SimLog", "PlannerError", "run_closed_loop"]


class PlannerError(RuntimeError):
    """Reference generation failed to converge."""


def _pack(s: RobotState) -> np.ndarray:
    return np.concatenate(([s.x, s.xdot], s.q, s.qdot))


def _unpack(y: np.ndarray, n: int) -> RobotState:
    return RobotState(x=float(y[0]), xdot=float(y[1]),
                      q=y[2:2 + n].copy(), qdot=y[2 + n:].copy())


def _deriv(desc: RobotDescription, y: np.ndarray, tau: np.ndarray,
           n: int) -> np.ndarray:
    s = RobotState(x=float(y[0]), xdot=float(y[1]), q=y[2:2 + n], qdot=y[2 + n:])
    acc = forward_dynamics(desc, s, tau)
    out = np.empty_like(y)
    out[0] = y[1]
    out[1] = acc[0]
    out[2:2 + n] = y[2 + n:]
    out[2 + n:] = acc[1:]
    return out


def integrate_step(desc: RobotDescription, s: RobotState, tau: np.ndarray,
                   dt: float) -> RobotState:
    """Classic RK4 step of the full model with torques held over the step."""
    tau = np.asarray(tau, dtype=float)
    n = desc.n
    y = _pack(s)
    k1 = _deriv(desc, y, tau, n)
    k2 = _deriv(desc, y + 0.5 * dt * k1, tau, n)
    k3 = _deriv(desc, y + 0.5 * dt * k2, tau, n)
    k4 = _deriv(desc, y + dt * k3, tau, n)
    return _unpack(y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), n)


def rollout(desc: RobotDescription, s0: RobotState, tau_of_t, dt: float,
            n_steps: int) -> list[RobotState]:
    """Integrate n_steps with tau_of_t(t) sampled once per step (ZOH)."""
    states = [s0.copy()]
    s = s0
    for k in range(n_steps):
        s = integrate_step(desc, s, tau_of_t(k * dt), dt)
        states.append(s)
    return states


@dataclass(frozen=True)
class SimConfig:
    duration: float = 20.0
    goal: float = 2.0            # heading target, m
    tf: float = 20.0             # reference horizon, s
    dt_physics: float = 1e-3
    wbc_period: float = 1e-3
    mpc_period: float = 0.01
    decimation: int = 1          # log every k-th physics step
    initial: RobotState | None = None   # default: upright rest at x = 0
    seed: int | None = None
    perturbation: float = 0.0    # initial-state noise scale, off by default
    divergence_angle: float = 1.2       # |theta| beyond this aborts, rad

    def __post_init__(self):
        if not (0.0 < self.dt_physics <= self.wbc_period <= self.mpc_period):
            raise ValueError(
                "need 0 < dt_physics <= wbc_period <= mpc_period")
        for name in ("wbc_period", "mpc_period", "duration"):
            ratio = getattr(self, name) / self.dt_physics
            if abs(ratio - round(ratio)) > 1e-9:
                raise ValueError(f"{name} must be a multiple of dt_physics")
        if self.tf < self.duration:
            raise ValueError("reference horizon tf must cover the duration")
        if self.decimation < 1:
            raise ValueError("decimation must be >= 1")


@dataclass(frozen=True)
class ControllerConfig:
    mpc: MpcConfig = field(default_factory=MpcConfig)
    wbc: wbc_mod.WbcConfig = field(default_factory=wbc_mod.WbcConfig)
    decoupled: bool = False
    balance_weight: float = 100.0
    ee_weight: float = 10.0
    reg_weight: float = 0.1


@dataclass
class SimLog:
    """Decimated per-physics-step history of a closed-loop run.

    End-effector coordinates are axle-relative (the frame the position
    task is expressed in), so they are reconstructible from the joint
    angles alone.
    """

    t: np.ndarray
    x: np.ndarray
    xdot: np.ndarray
    q: np.ndarray            # (rows, n)
    qdot: np.ndarray         # (rows, n)
    theta: np.ndarray
    thetadot: np.ndarray
    theta_traj: np.ndarray   # reference sample held over the outer period
    thetadot_traj: np.ndarray
    x_traj: np.ndarray
    xdot_traj: np.ndarray
    u: np.ndarray            # commanded pitch acceleration
    torques: np.ndarray      # (rows, n)
    ee_x: np.ndarray
    ee_z: np.ndarray
    ee_phi: np.ndarray
    e_kin: np.ndarray
    e_pot: np.ndarray
    qp_status: list
    mpc_iters: np.ndarray
    alpha: np.ndarray        # reduced-model parameter snapshots
    beta: np.ndarray
    com_length: np.ndarray
    task_errors: dict        # kind -> array
    n_mpc_calls: int
    n_wbc_calls: int
    diverged: bool
    divergence_reason: str
    goal: float
    ee_phi0: float
    torque_limits: np.ndarray

    def summary(self) -> dict:
        """Terminal errors, peaks, and task completion time."""
        if self.t.size == 0:
            return {"diverged": self.diverged,
                    "divergence_reason": self.divergence_reason,
                    "duration": 0.0, "n_mpc_calls": self.n_mpc_calls,
                    "n_wbc_calls": self.n_wbc_calls,
                    "completion_time": None}
        over = np.abs(self.torques) > self.torque_limits + 1e-8
        out = {
            "diverged": self.diverged,
            "divergence_reason": self.divergence_reason,
            "duration": float(self.t[-1]),
            "terminal_position_error": float(abs(self.x[-1] - self.goal)),
            "terminal_theta": float(self.theta[-1]),
            "peak_abs_theta": float(np.abs(self.theta).max()),
            "peak_ee_orientation_deviation": float(
                np.abs(self.ee_phi - self.ee_phi0).max()),
            "n_mpc_calls": self.n_mpc_calls,
            "n_wbc_calls": self.n_wbc_calls,
            "torque_limit_violations": int(over.any(axis=1).sum()),
        }
        held = np.abs(self.x - self.goal) < 0.05
        completion = None
        if held.size and held[-1]:
            k = held.size - 1
            while k > 0 and held[k - 1]:
                k -= 1
            completion = float(self.t[k])
        out["completion_time"] = completion
        return out


def run_closed_loop(desc: RobotDescription, cfg: SimConfig,
                    ctrl: ControllerConfig | None = None) -> SimLog:
    """Full pipeline: one reference solve, then the two-rate loop.

    Controller faults are logged and absorbed by the task controller's
    fallback ladder; only a non-finite or toppled state aborts the run,
    flagged in the returned log.
    """
    if ctrl is None:
        ctrl = ControllerConfig()
    s = cfg.initial.copy() if cfg.initial is not None else upright_rest(desc)
    if cfg.perturbation > 0.0:
        rng = np.random.default_rng(cfg.seed)
        s = s.copy(q=s.q + cfg.perturbation * rng.standard_normal(desc.n),
                   qdot=s.qdot + cfg.perturbation * rng.standard_normal(desc.n))

    p0 = extract_params(desc, s)
    goal_state = np.array([0.0, 0.0, cfg.goal, 0.0])
    reference = make_reference(p0, p0.state(s.x, s.xdot), goal_state,
                               cfg.tf, ctrl.mpc)
    if not reference.converged:
        raise PlannerError("reference trajectory did not converge")

    if ctrl.decoupled:
        tasks = wbc_mod.decoupled_tasks(desc, s,
                                        balance_weight=ctrl.balance_weight)
    else:
        tasks = wbc_mod.default_tasks(desc, s,
                                      balance_weight=ctrl.balance_weight,
                                      ee_weight=ctrl.ee_weight,
                                      reg_weight=ctrl.reg_weight)
    controller = MpcController(desc, reference, ctrl.mpc)

    n_steps = round(cfg.duration / cfg.dt_physics)
    mpc_stride = round(cfg.mpc_period / cfg.dt_physics)
    wbc_stride = round(cfg.wbc_period / cfg.dt_physics)
    n = desc.n

    rows: list[tuple] = []
    task_rows: list[dict] = []
    n_mpc = 0
    n_wbc = 0
    diverged = False
    reason = ""
    ee0 = ee_state(desc, s)
    ee_phi0 = float(ee0.phi)

    balance_ref = wbc_mod.BalanceReference()
    mpc_out = None
    wbc_out = None
    params = p0

    for k in range(n_steps):
        t = k * cfg.dt_physics
        if k % mpc_stride == 0:
            try:
                params = extract_params(desc, s)
                X = params.state(s.x, s.xdot)
                mpc_out = controller.solve_window(n_mpc, params, X)
            except (DegenerateConfigError, FloatingPointError):
                diverged = True
                reason = f"degenerate reduced model at t={t:.3f}"
                break
            balance_ref = wbc_mod.BalanceReference.from_mpc(mpc_out)
            n_mpc += 1
        if k % wbc_stride == 0:
            warm = wbc_out.active_constraints if wbc_out is not None else None
            wbc_out = wbc_mod.control_step(desc, s, tasks, balance_ref,
                                           ctrl.wbc, warm_active=warm)
            n_wbc += 1
        if k % cfg.decimation == 0:
            com = com_state(desc, s)
            ee = ee_state(desc, s)
            energy = total_energy(desc, s)
            rows.append((t, s.x, s.xdot, s.q.copy(), s.qdot.copy(),
                         com.theta, com.thetadot,
                         mpc_out.theta_ref, mpc_out.thetadot_ref,
                         mpc_out.x_ref, mpc_out.xdot_ref,
                         mpc_out.theta_ddot_ref,
                         wbc_out.torques.copy(),
                         ee.pos[0], ee.pos[1], ee.phi,
                         energy.kinetic, energy.potential,
                         wbc_out.qp_status, mpc_out.iterations,
                         params.alpha, params.beta, params.length))
            task_rows.append(wbc_out.task_errors)
        s = integrate_step(desc, s, wbc_out.torques, cfg.dt_physics)
        if not (np.isfinite(s.x) and np.isfinite(s.xdot)
                and np.isfinite(s.q).all() and np.isfinite(s.qdot).all()):
            diverged = True
            reason = f"non-finite state at t={t + cfg.dt_physics:.3f}"
            break
        try:
            tilt = com_state(desc, s).theta
        except DegenerateConfigError:
            diverged = True
            reason = f"center of mass at axle level at t={t + cfg.dt_physics:.3f}"
            break
        if abs(tilt) > cfg.divergence_angle:
            diverged = True
            reason = (f"tilt {tilt:.2f} rad beyond "
                      f"{cfg.divergence_angle} at t={t + cfg.dt_physics:.3f}")
            break

    cols = list(zip(*rows)) if rows else [[] for _ in range(23)]
    task_errors = {}
    for kind in (task_rows[0] if task_rows else {}):
        task_errors[kind] = np.array([r.get(kind, np.nan) for r in task_rows])
    return SimLog(
        t=np.array(cols[0]), x=np.array(cols[1]), xdot=np.array(cols[2]),
        q=np.array(cols[3]).reshape(-1, n),
        qdot=np.array(cols[4]).reshape(-1, n),
        theta=np.array(cols[5]), thetadot=np.array(cols[6]),
        theta_traj=np.array(cols[7]), thetadot_traj=np.array(cols[8]),
        x_traj=np.array(cols[9]), xdot_traj=np.array(cols[10]),
        u=np.array(cols[11]),
        torques=np.array(cols[12]).reshape(-1, n),
        ee_x=np.array(cols[13]), ee_z=np.array(cols[14]),
        ee_phi=np.array(cols[15]),
        e_kin=np.array(cols[16]), e_pot=np.array(cols[17]),
        qp_status=list(cols[18]),
        mpc_iters=np.array(cols[19], dtype=int),
        alpha=np.array(cols[20]), beta=np.array(cols[21]),
        com_length=np.array(cols[22]),
        task_errors=task_errors,
        n_mpc_calls=n_mpc, n_wbc_calls=n_wbc,
        diverged=diverged, divergence_reason=reason,
        goal=cfg.goal, ee_phi0=ee_phi0,
        torque_limits=desc.torque_limits())
