"""Receding-horizon control over the reduced model.

A long reference trajectory is optimized once from the initial state;
afterwards, every control period the reduced-model parameters are
re-extracted from the full robot, the optimizer is re-run over a short
window of that reference, and the first control of the window solution is
emitted together with the current reference sample.  The previous window
solution, shifted by one step, warm starts the next solve.

Degenerate parameter extraction (center of mass at or below the axle) is
fail-operational: the controller holds its previous output and flags the
sample instead of raising mid-loop.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from . import ddp
from .dynamics import DegenerateConfigError
from .model import RobotDescription, RobotState
from .wipm import THETA, THETADOT, POS, VEL, WipmParams, extract_params


def tracking_cost(run_weight_diag=(100.0, 1.0, 100.0, 1.0),
                  control_weight: float = 0.05,
                  terminal_scale: float = 1e3) -> ddp.CostSpec:
    """Fixture weights for window tracking.

    Positions carry heavier step cost than speeds; terminal weights are a
    large multiple of the running weights.  The reference stored here is a
    placeholder, replaced by the active window each solve.
    """
    run_w = np.asarray(run_weight_diag, dtype=float)
    return ddp.CostSpec(run_weight_diag=run_w,
                        control_weight=control_weight,
                        term_weight_diag=terminal_scale * run_w,
                        reference=np.zeros(4))


@dataclass(frozen=True)
class MpcConfig:
    period: float = 0.01        # control period, s
    horizon_time: float = 1.0   # window length, s
    dt: float = 0.01            # planner step, s
    cost: ddp.CostSpec = field(default_factory=tracking_cost)
    warm_start: bool = True
    max_iters: int = 50

    def __post_init__(self):
        if self.period <= 0 or self.dt <= 0:
            raise ValueError("period and dt must be positive")
        if self.horizon_time < self.period:
            raise ValueError("horizon_time must cover at least one period")
        n = self.horizon_time / self.dt
        if abs(n - round(n)) > 1e-9:
            raise ValueError("dt must divide horizon_time")

    @property
    def n_horizon(self) -> int:
        return round(self.horizon_time / self.dt)


@dataclass(frozen=True)
class MpcOutput:
    theta_ddot_ref: float   # first control of the window solution
    theta_ref: float        # reference sample at the current index
    thetadot_ref: float
    x_ref: float
    xdot_ref: float
    horizon_cost: float
    solve_converged: bool
    iterations: int = 0
    degenerate: bool = False


def make_reference(p0: WipmParams, x0: np.ndarray, goal: np.ndarray,
                   tf: float, cfg: MpcConfig,
                   cost: ddp.CostSpec | None = None) -> ddp.Trajectory:
    """Full-horizon reference from the initial reduced-model parameters.

    Non-convergence is surfaced through the trajectory's converged flag;
    the caller decides whether a best-effort reference is acceptable.
    """
    if tf < cfg.horizon_time:
        raise ValueError("tf must be at least the controller horizon")
    n_steps = round(tf / cfg.dt)
    if abs(tf / cfg.dt - n_steps) > 1e-9:
        raise ValueError("dt must divide tf")
    if cost is None:
        cost = ddp.goal_cost(goal)
    return ddp.solve(p0, x0, cost, n_steps=n_steps, dt=cfg.dt)


class MpcController:
    """Stateful window solver: owns the warm-start buffer.

    step(i, s_full) serves the closed loop; solve_window(i, p, X) is the
    model-only core, usable with a reduced-model plant directly.
    """

    def __init__(self, desc: RobotDescription, reference: ddp.Trajectory,
                 cfg: MpcConfig | None = None):
        self.desc = desc
        self.reference = reference
        self.cfg = cfg if cfg is not None else MpcConfig()
        self._warm: np.ndarray | None = None
        self._previous: MpcOutput | None = None

    def _reference_sample(self, i: int) -> np.ndarray:
        states = self.reference.states
        return states[min(i, states.shape[0] - 1)]

    def _window(self, i: int) -> np.ndarray:
        states = self.reference.states
        idx = np.minimum(np.arange(i, i + self.cfg.n_horizon + 1),
                         states.shape[0] - 1)
        return states[idx]

    def solve_window(self, i: int, p: WipmParams,
                     X: np.ndarray) -> MpcOutput:
        """Optimize the window [i, i+N] of the reference from state X."""
        if i < 0:
            raise ValueError("reference index must be nonnegative")
        cfg = self.cfg
        cost = dataclasses.replace(cfg.cost, reference=self._window(i))
        init = None
        if cfg.warm_start and self._warm is not None:
            init = np.append(self._warm[1:], self._warm[-1])
        opts = ddp.DdpOptions(max_iters=cfg.max_iters, init_controls=init)
        traj = ddp.solve(p, X, cost, n_steps=cfg.n_horizon, dt=cfg.dt,
                         opts=opts)
        self._warm = traj.controls
        ref_i = self._reference_sample(i)
        out = MpcOutput(theta_ddot_ref=float(traj.controls[0]),
                        theta_ref=float(ref_i[THETA]),
                        thetadot_ref=float(ref_i[THETADOT]),
                        x_ref=float(ref_i[POS]),
                        xdot_ref=float(ref_i[VEL]),
                        horizon_cost=traj.cost,
                        solve_converged=traj.converged,
                        iterations=traj.iterations)
        self._previous = out
        return out

    def step(self, i: int, s_full: RobotState) -> MpcOutput:
        """One control-period update from the full robot state.

        Parameters are re-extracted every call; on a degenerate
        configuration the previous output is held and flagged.
        """
        try:
            p = extract_params(self.desc, s_full)
        except DegenerateConfigError:
            if self._previous is not None:
                return dataclasses.replace(self._previous, degenerate=True)
            ref_i = self._reference_sample(max(i, 0))
            return MpcOutput(theta_ddot_ref=0.0,
                             theta_ref=float(ref_i[THETA]),
                             thetadot_ref=float(ref_i[THETADOT]),
                             x_ref=float(ref_i[POS]),
                             xdot_ref=float(ref_i[VEL]),
                             horizon_cost=float("nan"),
                             solve_converged=False,
                             degenerate=True)
        X = p.state(s_full.x, s_full.xdot)
        return self.solve_window(i, p, X)

    def reset(self):
        self._warm = None
        self._previous = None
