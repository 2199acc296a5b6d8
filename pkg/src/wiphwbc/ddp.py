"""Trajectory optimization over the reduced pendulum-on-wheel model.

iLQR variant: Gauss-Newton backward pass on the Euler-discretized reduced
model (first-order dynamics expansion, no second-order dynamics tensors),
Levenberg-Marquardt regularization of the control Hessian, and a
backtracking forward pass that only accepts strict cost decrease.  The
4-state/1-input model keeps every inner quantity scalar or length-4, so
the passes are written directly in numpy without batching tricks.

Costs are quadratic in the deviation from a reference that is either a
fixed goal state or a time-indexed sequence; the same solver therefore
serves both full-horizon reference generation and the receding-horizon
controller built on top of it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .wipm import WipmParams, step, step_jacobians

_LAMBDA_MIN = 1e-9
_LAMBDA_MAX = 1e10
_LAMBDA_UP = 10.0
_LAMBDA_DOWN = 5.0
_ALPHA_STEPS = 11  # 2**0 .. 2**-10


@dataclass(frozen=True)
class CostSpec:
    """Quadratic tracking cost for the reduced-model optimizer.

    run_weight_diag / term_weight_diag are the diagonals of the running and
    terminal state-weight matrices; control_weight multiplies u^2.  The
    reference is a single state (4,) applied at every step or a sequence
    (M, 4) indexed by step and clamped to its final row past the end.
    """

    run_weight_diag: np.ndarray
    control_weight: float
    term_weight_diag: np.ndarray
    reference: np.ndarray

    def __post_init__(self):
        run_w = np.asarray(self.run_weight_diag, dtype=float)
        term_w = np.asarray(self.term_weight_diag, dtype=float)
        ref = np.asarray(self.reference, dtype=float)
        if run_w.shape != (4,) or term_w.shape != (4,):
            raise ValueError("weight diagonals must have shape (4,)")
        if not (np.isfinite(run_w).all() and np.isfinite(term_w).all()):
            raise ValueError("weights must be finite")
        if run_w.min() < 0 or term_w.min() < 0 or self.control_weight < 0:
            raise ValueError("weights must be nonnegative")
        if ref.ndim == 1:
            ref = ref.reshape(1, 4)
        if ref.ndim != 2 or ref.shape[1] != 4 or ref.shape[0] < 1:
            raise ValueError("reference must be (4,) or (M, 4)")
        if not np.isfinite(ref).all():
            raise ValueError("reference must be finite")
        object.__setattr__(self, "run_weight_diag", run_w)
        object.__setattr__(self, "term_weight_diag", term_w)
        object.__setattr__(self, "reference", ref)

    def reference_at(self, i: int) -> np.ndarray:
        return self.reference[min(i, self.reference.shape[0] - 1)]


def goal_cost(goal: np.ndarray,
              run_weight_diag=(50.0, 1.0, 10.0, 1.0),
              control_weight: float = 0.1,
              term_weight_diag=(1e6, 1e5, 1e6, 1e5)) -> CostSpec:
    """Fixture cost for go-to-goal tasks.

    Pitch carries the largest running state weight; terminal weights are
    orders of magnitude above running weights to pin the endpoint.
    """
    return CostSpec(run_weight_diag=np.asarray(run_weight_diag, float),
                    control_weight=control_weight,
                    term_weight_diag=np.asarray(term_weight_diag, float),
                    reference=np.asarray(goal, float))


@dataclass(frozen=True)
class Trajectory:
    """Solver output: open-loop rollout plus time-varying feedback.

    states[i+1] is exactly step(states[i], controls[i]); cost is the
    tracking cost of that rollout.  feedforward[i] and feedback[i] come
    from the final backward pass and correct deviations from states[i].
    """

    states: np.ndarray       # (N+1, 4)
    controls: np.ndarray     # (N,)
    feedforward: np.ndarray  # (N,)
    feedback: np.ndarray     # (N, 4)
    cost: float
    converged: bool
    iterations: int
    cost_history: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def horizon(self) -> int:
        return self.controls.shape[0]


@dataclass(frozen=True)
class DdpOptions:
    max_iters: int = 200
    tol_cost: float = 1e-9
    init_lambda: float = 1e-6
    init_controls: np.ndarray | None = None


def rollout(p: WipmParams, x0: np.ndarray, controls: np.ndarray,
            dt: float) -> np.ndarray:
    """Integrate the Euler map under an open-loop control sequence."""
    n_steps = controls.shape[0]
    states = np.empty((n_steps + 1, 4))
    states[0] = np.asarray(x0, dtype=float)
    for i in range(n_steps):
        states[i + 1] = step(states[i], float(controls[i]), p, dt)
    return states


def trajectory_cost(cost: CostSpec, states: np.ndarray,
                    controls: np.ndarray) -> float:
    n_steps = controls.shape[0]
    total = 0.0
    for i in range(n_steps):
        err = states[i] - cost.reference_at(i)
        total += err @ (cost.run_weight_diag * err)
        total += cost.control_weight * controls[i] ** 2
    err = states[n_steps] - cost.reference_at(n_steps)
    total += err @ (cost.term_weight_diag * err)
    return float(total)


def control_gradient(p: WipmParams, x0: np.ndarray, controls: np.ndarray,
                     cost: CostSpec, dt: float) -> np.ndarray:
    """Adjoint gradient of the total cost w.r.t. the control sequence."""
    states = rollout(p, x0, controls, dt)
    n_steps = controls.shape[0]
    grad = np.empty(n_steps)
    err = states[n_steps] - cost.reference_at(n_steps)
    lam = 2.0 * cost.term_weight_diag * err
    for i in range(n_steps - 1, -1, -1):
        fx, fu = step_jacobians(states[i], float(controls[i]), p, dt)
        grad[i] = 2.0 * cost.control_weight * controls[i] + fu @ lam
        err = states[i] - cost.reference_at(i)
        lam = 2.0 * cost.run_weight_diag * err + fx.T @ lam
    return grad


def _backward_pass(p: WipmParams, cost: CostSpec, states: np.ndarray,
                   controls: np.ndarray, dt: float, lam_reg: float):
    """One regularized backward sweep.

    Returns (feedforward, feedback, expected_decrease) or None when the
    regularized control Hessian loses positivity at some step.
    """
    n_steps = controls.shape[0]
    kff = np.empty(n_steps)
    Kfb = np.empty((n_steps, 4))
    err = states[n_steps] - cost.reference_at(n_steps)
    Vx = 2.0 * cost.term_weight_diag * err
    Vxx = np.diag(2.0 * cost.term_weight_diag)
    dv_lin = 0.0
    dv_quad = 0.0
    for i in range(n_steps - 1, -1, -1):
        fx, fu = step_jacobians(states[i], float(controls[i]), p, dt)
        err = states[i] - cost.reference_at(i)
        Qx = 2.0 * cost.run_weight_diag * err + fx.T @ Vx
        Qu = 2.0 * cost.control_weight * controls[i] + fu @ Vx
        Qxx = np.diag(2.0 * cost.run_weight_diag) + fx.T @ Vxx @ fx
        Vxx_fu = Vxx @ fu
        Qux = fx.T @ Vxx_fu
        Quu = 2.0 * cost.control_weight + fu @ Vxx_fu
        Quu_reg = Quu + lam_reg
        if Quu_reg <= 0.0 or not np.isfinite(Quu_reg):
            return None
        kff[i] = -Qu / Quu_reg
        Kfb[i] = -Qux / Quu_reg
        dv_lin += kff[i] * Qu
        dv_quad += 0.5 * kff[i] ** 2 * Quu
        Vx = Qx + Kfb[i] * (Quu * kff[i] + Qu) + Qux * kff[i]
        Vxx = Qxx + np.outer(Kfb[i], Kfb[i]) * Quu \
            + np.outer(Kfb[i], Qux) + np.outer(Qux, Kfb[i])
        Vxx = 0.5 * (Vxx + Vxx.T)
    return kff, Kfb, -(dv_lin + dv_quad)


def _forward_pass(p: WipmParams, cost: CostSpec, states: np.ndarray,
                  controls: np.ndarray, kff: np.ndarray, Kfb: np.ndarray,
                  alpha: float, dt: float):
    """Roll out the corrected policy; returns (states, controls, cost) or
    None on non-finite dynamics."""
    n_steps = controls.shape[0]
    new_states = np.empty_like(states)
    new_controls = np.empty_like(controls)
    new_states[0] = states[0]
    for i in range(n_steps):
        du = alpha * kff[i] + Kfb[i] @ (new_states[i] - states[i])
        new_controls[i] = controls[i] + du
        new_states[i + 1] = step(new_states[i], float(new_controls[i]), p, dt)
        if not np.isfinite(new_states[i + 1]).all():
            return None
    return new_states, new_controls, trajectory_cost(cost, new_states,
                                                     new_controls)


def solve(p: WipmParams, x0: np.ndarray, cost: CostSpec, n_steps: int,
          dt: float, opts: DdpOptions | None = None) -> Trajectory:
    """Optimize an n_steps-long control sequence from x0.

    Iterates backward/forward passes until the accepted-cost decrease
    falls below tol_cost * max(1, |J|) or max_iters is reached; the best
    rollout found so far is always returned, flagged by converged.
    """
    if opts is None:
        opts = DdpOptions()
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (4,) or not np.isfinite(x0).all():
        raise ValueError("x0 must be a finite state of shape (4,)")

    if opts.init_controls is not None:
        controls = np.asarray(opts.init_controls, dtype=float).copy()
        if controls.shape != (n_steps,):
            raise ValueError("init_controls must have shape (n_steps,)")
    else:
        controls = np.zeros(n_steps)
    states = rollout(p, x0, controls, dt)
    if not np.isfinite(states).all():
        raise FloatingPointError("initial rollout diverged")
    total = trajectory_cost(cost, states, controls)

    lam_reg = opts.init_lambda
    kff = np.zeros(n_steps)
    Kfb = np.zeros((n_steps, 4))
    converged = False
    iterations = 0
    history = [total]

    for it in range(1, opts.max_iters + 1):
        iterations = it
        back = _backward_pass(p, cost, states, controls, dt, lam_reg)
        if back is None:
            lam_reg = min(lam_reg * _LAMBDA_UP, _LAMBDA_MAX)
            if lam_reg >= _LAMBDA_MAX:
                break
            continue
        kff, Kfb, expected = back
        # nearly-zero expected improvement means the current rollout is
        # stationary, but only trust it when the regularizer is not the
        # thing shrinking the step
        if lam_reg <= 1e-3 and expected <= opts.tol_cost * max(1.0, abs(total)):
            converged = True
            break
        accepted = False
        for a_idx in range(_ALPHA_STEPS):
            alpha = 0.5 ** a_idx
            fwd = _forward_pass(p, cost, states, controls, kff, Kfb,
                                alpha, dt)
            if fwd is None:
                continue
            new_states, new_controls, new_total = fwd
            if new_total < total:
                decrease = total - new_total
                states, controls, total = new_states, new_controls, new_total
                history.append(total)
                accepted = True
                break
        if accepted:
            lam_reg = max(lam_reg / _LAMBDA_DOWN, _LAMBDA_MIN)
            if decrease <= opts.tol_cost * max(1.0, abs(total)):
                converged = True
                break
        else:
            lam_reg = min(lam_reg * _LAMBDA_UP, _LAMBDA_MAX)
            if lam_reg >= _LAMBDA_MAX:
                break

    return Trajectory(states=states, controls=controls, feedforward=kff,
                      feedback=Kfb, cost=total, converged=converged,
                      iterations=iterations, cost_history=np.array(history))
