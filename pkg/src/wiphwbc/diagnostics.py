"""Invariant battery behind the `check` CLI subcommand.

Every check measures a structural property of the stack against an
independent route: finite differences for Jacobians and the mass-matrix
rate, energy bookkeeping for the integrator, torque reconstruction for the
heading elimination, a coupled rollout for the reduced model, and
active-set enumeration for the QP solver.  Results carry the measured
worst case next to the tolerance it must beat, so a report line reads as
evidence rather than a bare verdict.

The battery is deterministic: sampling uses a fixed seed recorded in the
report.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from . import dynamics, isolation, qp, wipm
from .model import RobotDescription, RobotState
from .sim import integrate_step
from .wbc import task_geometry

__all__ = ["CheckResult", "run_battery", "format_report"]

_SEED = 20260816


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float
    tolerance: float
    detail: str = ""


def _random_state(desc: RobotDescription, rng, angle: float = 0.5,
                  vel: float = 1.0) -> RobotState:
    return RobotState(x=float(rng.uniform(-1.0, 1.0)),
                      xdot=float(rng.uniform(-vel, vel)),
                      q=rng.uniform(-angle, angle, desc.n),
                      qdot=rng.uniform(-vel, vel, desc.n))


def _check_mass_matrix(desc: RobotDescription, rng) -> list[CheckResult]:
    worst_sym = 0.0
    min_eig = np.inf
    for _ in range(200):
        s = _random_state(desc, rng, angle=1.0, vel=2.0)
        A = dynamics.mass_matrix(desc, s)
        worst_sym = max(worst_sym, float(np.abs(A - A.T).max()))
        min_eig = min(min_eig, float(np.linalg.eigvalsh(A).min()))
    return [
        CheckResult("mass matrix symmetry", worst_sym < 1e-12,
                    worst_sym, 1e-12, "max |A - A^T| over 200 states"),
        CheckResult("mass matrix positive definite", min_eig > 0.0,
                    min_eig, 0.0, "min eigenvalue over 200 states"),
    ]


def _check_skew_symmetry(desc: RobotDescription, rng) -> CheckResult:
    # Adot from central differences along the flow; the Christoffel form
    # must satisfy the matrix identity Adot = C + C^T
    worst = 0.0
    eps = 1e-6
    for _ in range(200):
        s = _random_state(desc, rng, angle=1.0, vel=2.0)
        sp = RobotState(s.x, s.xdot, s.q + eps * s.qdot, s.qdot)
        sm = RobotState(s.x, s.xdot, s.q - eps * s.qdot, s.qdot)
        adot = (dynamics.mass_matrix(desc, sp)
                - dynamics.mass_matrix(desc, sm)) / (2.0 * eps)
        t = dynamics.dynamics_terms(desc, s)
        worst = max(worst, float(np.abs(adot - (t.C + t.C.T)).max()))
    return CheckResult("coriolis skew symmetry", worst < 1e-7, worst, 1e-7,
                       "max |Adot_fd - (C + C^T)| over 200 states")


def _check_energy(desc: RobotDescription, rng) -> CheckResult:
    damped = any(link.damping > 0.0 for link in desc.links)
    s = _random_state(desc, rng, angle=0.3, vel=0.3)
    dt = 1e-4
    tau = np.zeros(desc.n)
    e0 = dynamics.total_energy(desc, s).total
    if not damped:
        for _ in range(10000):  # 1 s
            s = integrate_step(desc, s, tau, dt)
        e1 = dynamics.total_energy(desc, s).total
        drift = abs(e1 - e0) / max(1.0, abs(e0))
        return CheckResult("energy conservation", drift < 1e-6, drift, 1e-6,
                           "relative drift, 1 s unforced frictionless")
    # damping dissipates; account for it and require E(t) - E(0) = W_fric
    work = 0.0
    for _ in range(10000):  # 1 s
        t = dynamics.dynamics_terms(desc, s)
        p_before = float(s.minimal_velocity() @ t.friction)
        s = integrate_step(desc, s, tau, dt)
        t = dynamics.dynamics_terms(desc, s)
        p_after = float(s.minimal_velocity() @ t.friction)
        work += 0.5 * dt * (p_before + p_after)
    e1 = dynamics.total_energy(desc, s).total
    err = abs((e1 - e0) - work) / max(1.0, abs(e0), abs(work))
    return CheckResult("energy power balance", err < 1e-5, err, 1e-5,
                       "|dE - friction work|, 1 s unforced damped")


def _check_isolation(desc: RobotDescription, rng) -> CheckResult:
    worst = 0.0
    for _ in range(200):
        s = _random_state(desc, rng, angle=0.8, vel=1.5)
        tau = rng.uniform(-5.0, 5.0, desc.n)
        acc = dynamics.forward_dynamics(desc, s, tau)
        iso = isolation.isolate_at(desc, s)
        tau_rec = isolation.inverse_dynamics(iso, acc[1:])
        xdd = isolation.heading_acceleration(iso, acc[1:], float(tau[0]))
        worst = max(worst, float(np.abs(tau_rec - tau).max()),
                    abs(xdd - acc[0]))
    return CheckResult("heading isolation round trip", worst < 1e-9,
                       worst, 1e-9,
                       "torque + heading reconstruction, 200 states")


def _single_link(desc: RobotDescription) -> RobotDescription:
    # the reduced model carries no joint friction, so exactness is stated
    # for the frictionless single-link chain
    link = replace(desc.links[0], damping=0.0)
    return RobotDescription(wheel=desc.wheel, links=(link,),
                            gravity=desc.gravity)


def _check_reduced_pointwise(desc: RobotDescription, rng) -> CheckResult:
    # single-link chain: the reduced model is the full model, so applying
    # the recovered wheel torque must reproduce (xddot, u) exactly
    sub = _single_link(desc)
    worst = 0.0
    for _ in range(50):
        th = float(rng.uniform(-0.7, 0.7))
        w = float(rng.uniform(-2.0, 2.0))
        u = float(rng.uniform(-10.0, 10.0))
        s = RobotState(0.0, 0.0, np.array([th]), np.array([w]))
        p = wipm.extract_params(sub, s)
        xdd = wipm.planar_accel(p, th, w, u)
        tau1 = wipm.wheel_torque(p, th, w, xdd, u)
        acc = dynamics.forward_dynamics(sub, s, np.array([tau1]))
        worst = max(worst, float(np.abs(acc - np.array([xdd, u])).max()))
    return CheckResult("reduced model pointwise exactness", worst < 1e-9,
                       worst, 1e-9, "single-link matched torque, 50 samples")


def _check_reduced_rollout(desc: RobotDescription) -> CheckResult:
    # coupled integration: full single-link plant driven by the recovered
    # wheel torque must shadow the reduced state for the whole window
    sub = _single_link(desc)
    s0 = RobotState(0.0, 0.0, np.zeros(1), np.zeros(1))
    p = wipm.extract_params(sub, s0)

    def u_of(t, X):
        return (2.0 * np.sin(2.0 * np.pi * 0.7 * t)
                - 1.5 * X[0] - 0.8 * X[1])

    def deriv(t, y):
        full = RobotState(y[0], y[1], y[2:3], y[3:4])
        X = y[4:]
        u = u_of(t, X)
        xdd_r = wipm.planar_accel(p, X[0], X[1], u)
        tau1 = wipm.wheel_torque(p, X[0], X[1], xdd_r, u)
        acc = dynamics.forward_dynamics(sub, full, np.array([tau1]))
        return np.array([y[1], acc[0], y[3], acc[1],
                         X[1], u, X[3], xdd_r])

    y = np.zeros(8)
    dt = 1e-3
    worst = 0.0
    for k in range(2000):  # 2 s
        t = k * dt
        k1 = deriv(t, y)
        k2 = deriv(t + 0.5 * dt, y + 0.5 * dt * k1)
        k3 = deriv(t + 0.5 * dt, y + 0.5 * dt * k2)
        k4 = deriv(t + dt, y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        full_X = np.array([y[2], y[3], y[0], y[1]])  # (theta, thetadot, x, xdot)
        worst = max(worst, float(np.abs(full_X - y[4:]).max()))
    return CheckResult("reduced model rollout exactness", worst < 1e-6,
                       worst, 1e-6, "2 s coupled single-link rollout")


def _check_task_jacobians(desc: RobotDescription, rng) -> CheckResult:
    worst = 0.0
    h = 1e-6
    for _ in range(30):
        s = _random_state(desc, rng, angle=0.6, vel=1.0)
        for kind in ("com_angle", "ee_position", "ee_orientation"):
            J, _, _, vel = task_geometry(desc, s, kind)
            J = np.atleast_2d(J)
            fd = np.zeros_like(J)
            for j in range(desc.n):
                dq = np.zeros(desc.n)
                dq[j] = h
                vp = np.atleast_1d(task_geometry(
                    desc, RobotState(s.x, s.xdot, s.q + dq, s.qdot), kind)[2])
                vm = np.atleast_1d(task_geometry(
                    desc, RobotState(s.x, s.xdot, s.q - dq, s.qdot), kind)[2])
                fd[:, j] = (vp - vm) / (2.0 * h)
            worst = max(worst, float(np.abs(J - fd).max()))
            worst = max(worst, float(np.abs(np.atleast_1d(vel)
                                            - J @ s.qdot).max()))
    return CheckResult("task jacobians vs finite differences", worst < 1e-6,
                       worst, 1e-6,
                       "balance + end-effector rows, 30 states")


def _brute_force_qp(p: qp.QpProblem):
    """Active-set enumeration; global optimum of a small strictly convex QP."""
    d, e, k = p.dims()
    G = 0.5 * (p.G + p.G.T)
    if np.linalg.eigvalsh(G).min() < 1e-12:
        G = G + 1e-9 * np.eye(d)
    best = None
    for r in range(k + 1):
        for subset in itertools.combinations(range(k), r):
            rows = []
            rhs = []
            if e:
                rows.append(p.C_E)
                rhs.append(-p.c_E)
            if subset:
                rows.append(p.C_I[list(subset)])
                rhs.append(-p.c_I[list(subset)])
            A = np.vstack(rows) if rows else np.zeros((0, d))
            b = np.concatenate(rhs) if rhs else np.zeros(0)
            na = A.shape[0]
            K = np.zeros((d + na, d + na))
            K[:d, :d] = G
            K[:d, d:] = A.T
            K[d:, :d] = A
            try:
                sol = np.linalg.solve(K, np.concatenate((-p.g, b)))
            except np.linalg.LinAlgError:
                continue
            x = sol[:d]
            if na and np.abs(A @ x - b).max() > 1e-8:
                continue
            if k:
                viol = p.C_I @ x + p.c_I
                if viol.max() > 1e-8:
                    continue
            cost = 0.5 * x @ G @ x + p.g @ x
            if best is None or cost < best[1] - 1e-12:
                best = (x, cost)
    return best


def _random_qp(rng) -> qp.QpProblem:
    d = int(rng.integers(2, 5))
    e = int(rng.integers(0, 2))
    k = int(rng.integers(0, 6))
    M = rng.standard_normal((d, d))
    G = M @ M.T + d * np.eye(d)
    g = rng.standard_normal(d)
    x_feas = rng.standard_normal(d)
    C_E = c_E = C_I = c_I = None
    if e:
        C_E = rng.standard_normal((e, d))
        c_E = -C_E @ x_feas
    if k:
        C_I = rng.standard_normal((k, d))
        c_I = -C_I @ x_feas - rng.uniform(0.0, 1.0, k)
    return qp.QpProblem(G=G, g=g, C_E=C_E, c_E=c_E, C_I=C_I, c_I=c_I)


def _check_qp(rng) -> list[CheckResult]:
    worst_kkt = 0.0
    worst_gap = 0.0
    all_optimal = True
    for _ in range(100):
        prob = _random_qp(rng)
        sol = qp.solve_qp(prob)
        if not sol.ok:
            all_optimal = False
            continue
        worst_kkt = max(worst_kkt, sol.kkt_residual)
        ref = _brute_force_qp(prob)
        if ref is None:  # constructed feasible, so this would be a bug
            all_optimal = False
            continue
        scale = 1.0 + abs(ref[1])
        worst_gap = max(worst_gap, abs(sol.cost - ref[1]) / scale)
    return [
        CheckResult("qp kkt residual", all_optimal and worst_kkt < 1e-8,
                    worst_kkt, 1e-8, "100 feasible strictly convex QPs"),
        CheckResult("qp enumeration oracle", all_optimal and worst_gap < 1e-8,
                    worst_gap, 1e-8, "relative cost gap to global optimum"),
    ]


def run_battery(desc: RobotDescription) -> list[CheckResult]:
    """All invariant checks for one robot description, fixed sampling seed."""
    rng = np.random.default_rng(_SEED)
    results = []
    results.extend(_check_mass_matrix(desc, rng))
    results.append(_check_skew_symmetry(desc, rng))
    results.append(_check_energy(desc, rng))
    results.append(_check_isolation(desc, rng))
    results.append(_check_reduced_pointwise(desc, rng))
    results.append(_check_reduced_rollout(desc))
    results.append(_check_task_jacobians(desc, rng))
    results.extend(_check_qp(rng))
    return results


def format_report(results: list[CheckResult]) -> str:
    lines = []
    for r in results:
        verdict = "PASS" if r.passed else "FAIL"
        lines.append(f"  {r.name:<38} {verdict}  measured {r.measured:.3e}"
                     f"  tol {r.tolerance:.1e}  ({r.detail})")
    n_fail = sum(not r.passed for r in results)
    lines.append(f"{len(results) - n_fail} passed, {n_fail} failed"
                 f" (sampling seed {_SEED})")
    return "\n".join(lines)
