"""Dense convex QP solver: primal active set with null-space elimination.

Problem form:

    min  1/2 x^T G x + g^T x
    s.t. C_E x + c_E  = 0
         C_I x + c_I <= 0

G is made strictly convex with a tiny ridge when needed, equalities are
eliminated through an SVD null-space basis, and inequalities are handled by
the textbook primal active-set iteration: solve the equality-constrained
subproblem on the working set, either step until a constraint blocks (and add
it) or, at a subproblem optimum, drop the constraint with the most negative
multiplier.  Ties break toward the lowest constraint index, so the iteration
is deterministic.  A feasible start, when none is supplied, comes from a
phase-1 LP.  Solutions report Lagrange multipliers, the active set, and the
worst KKT residual.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

__all__ = ["QpProblem", "QpSolution", "solve_qp"]

_RIDGE = 1e-9           # added to G when min eigenvalue < _EIG_TOL
_EIG_TOL = 1e-12
_FEAS_TOL = 1e-9        # constraint violation considered feasible
_ACTIVE_TOL = 1e-9      # constraint treated as active at the current point
_MULT_TOL = 1e-9        # multiplier negativity triggering a drop
_STEP_TOL = 1e-11


@dataclass(frozen=True)
class QpProblem:
    G: np.ndarray                      # (d, d) symmetric PSD
    g: np.ndarray                      # (d,)
    C_E: np.ndarray | None = None      # (e, d)
    c_E: np.ndarray | None = None      # (e,)
    C_I: np.ndarray | None = None      # (k, d)
    c_I: np.ndarray | None = None      # (k,)

    def dims(self) -> tuple[int, int, int]:
        d = self.g.shape[0]
        e = 0 if self.C_E is None else self.C_E.shape[0]
        k = 0 if self.C_I is None else self.C_I.shape[0]
        return d, e, k


@dataclass
class QpSolution:
    x: np.ndarray | None
    status: str                        # "optimal" | "infeasible" | "max_iter"
    lam_eq: np.ndarray = field(default_factory=lambda: np.zeros(0))
    lam_ineq: np.ndarray = field(default_factory=lambda: np.zeros(0))
    active: list[int] = field(default_factory=list)
    iterations: int = 0
    kkt_residual: float = np.inf
    cost: float = np.nan

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


def _null_space(A: np.ndarray, tol: float = 1e-10):
    """Least-norm particular basis split: returns (pinv solve fn, Z)."""
    u, sv, vt = np.linalg.svd(A, full_matrices=True)
    rank = int((sv > tol * max(A.shape) * (sv[0] if sv.size else 1.0)).sum())
    Z = vt[rank:].T
    return u, sv, vt, rank, Z


def _solve_eqp(G: np.ndarray, q: np.ndarray, A: np.ndarray):
    """min 1/2 p^T G p + q^T p  s.t.  A p = 0; returns (p, lam)."""
    d = q.shape[0]
    na = A.shape[0]
    if na == 0:
        return np.linalg.solve(G, -q), np.zeros(0)
    K = np.zeros((d + na, d + na))
    K[:d, :d] = G
    K[:d, d:] = A.T
    K[d:, :d] = A
    rhs = np.concatenate((-q, np.zeros(na)))
    sol = np.linalg.solve(K, rhs)
    return sol[:d], sol[d:]


def _independent_rows(A: np.ndarray, candidates: list[int]) -> list[int]:
    """Greedy lowest-index subset of rows with full rank."""
    keep: list[int] = []
    for j in candidates:
        trial = A[keep + [j]]
        if np.linalg.matrix_rank(trial, tol=1e-10) == len(keep) + 1:
            keep.append(j)
    return keep


def _phase1(C: np.ndarray, c: np.ndarray) -> np.ndarray | None:
    """Feasible point of C y + c <= 0 via min-t LP; None when infeasible."""
    k, d = C.shape
    A_ub = np.hstack((C, -np.ones((k, 1))))
    res = linprog(
        c=np.concatenate((np.zeros(d), [1.0])),
        A_ub=A_ub, b_ub=-c,
        bounds=[(None, None)] * d + [(0.0, None)],
        method="highs",
    )
    if not res.success or res.x[-1] > 1e-8:
        return None
    return res.x[:d]


def _kkt_residual(p: QpProblem, x, lam_eq, lam_ineq) -> float:
    d, e, k = p.dims()
    r = p.G @ x + p.g
    if e:
        r = r + p.C_E.T @ lam_eq
    if k:
        r = r + p.C_I.T @ lam_ineq
    worst = np.abs(r).max() if d else 0.0
    if e:
        worst = max(worst, np.abs(p.C_E @ x + p.c_E).max())
    if k:
        viol = p.C_I @ x + p.c_I
        worst = max(worst, max(0.0, viol.max()))
        worst = max(worst, max(0.0, -(lam_ineq.min() if k else 0.0)))
        worst = max(worst, np.abs(lam_ineq * viol).max())
    return float(worst)


def solve_qp(prob: QpProblem, x0: np.ndarray | None = None,
             active0: list[int] | None = None,
             max_iter: int | None = None) -> QpSolution:
    """Solve the QP; x0 / active0 warm-start the point and working set."""
    d, e, k = prob.dims()
    G = np.asarray(prob.G, dtype=float)
    g = np.asarray(prob.g, dtype=float)
    if G.shape != (d, d):
        raise ValueError(f"G must be ({d}, {d}), got {G.shape}")
    G = 0.5 * (G + G.T)
    if d and np.linalg.eigvalsh(G).min() < _EIG_TOL:
        G = G + _RIDGE * np.eye(d)

    # eliminate equalities: x = x_p + Z y
    if e:
        CE = np.asarray(prob.C_E, dtype=float)
        cE = np.asarray(prob.c_E, dtype=float)
        u, sv, vt, rank, Z = _null_space(CE)
        # least-norm particular solution; inconsistent rows mean infeasible
        sv_inv = np.where(sv > 1e-12, 1.0 / np.maximum(sv, 1e-300), 0.0)
        x_p = vt[:rank].T @ (sv_inv[:rank] * (u.T[:rank] @ -cE))
        if np.abs(CE @ x_p + cE).max() > _FEAS_TOL:
            return QpSolution(x=None, status="infeasible")
    else:
        x_p = np.zeros(d)
        Z = np.eye(d)

    nz = Z.shape[1]
    Gz = Z.T @ G @ Z
    gz = Z.T @ (g + G @ x_p)
    if k:
        CI = np.asarray(prob.C_I, dtype=float)
        cI = np.asarray(prob.c_I, dtype=float)
        Cz = CI @ Z
        cz = cI + CI @ x_p
    else:
        Cz = np.zeros((0, nz))
        cz = np.zeros(0)

    def finish(y, W, lam_w, iters, status="optimal"):
        x = x_p + Z @ y
        lam_ineq = np.zeros(k)
        for idx, j in enumerate(W):
            lam_ineq[j] = lam_w[idx]
        # equality multipliers from full-space stationarity
        resid = G @ x + g + (prob.C_I.T @ lam_ineq if k else 0.0)
        if e:
            lam_eq = np.linalg.lstsq(CE.T, -resid, rcond=None)[0]
        else:
            lam_eq = np.zeros(0)
        sol = QpSolution(x=x, status=status, lam_eq=lam_eq, lam_ineq=lam_ineq,
                         active=sorted(W), iterations=iters,
                         cost=float(0.5 * x @ G @ x + g @ x))
        sol.kkt_residual = _kkt_residual(prob, x, lam_eq, lam_ineq)
        return sol

    if nz == 0:
        # fully determined by equalities
        if k and (Cz @ np.zeros(0) + cz > _FEAS_TOL).any():
            return QpSolution(x=None, status="infeasible")
        return finish(np.zeros(0), [], np.zeros(0), 0)

    # feasible start: warm hint, then unconstrained minimum, then phase 1
    y = None
    if x0 is not None:
        y_try = Z.T @ (np.asarray(x0, dtype=float) - x_p)
        if k == 0 or (Cz @ y_try + cz <= _FEAS_TOL).all():
            y = y_try
    if y is None:
        y_unc = np.linalg.solve(Gz, -gz)
        if k == 0 or (Cz @ y_unc + cz <= _FEAS_TOL).all():
            # already optimal over the inequalities
            return finish(y_unc, [], np.zeros(0), 0)
        y_zero = np.zeros(nz)
        if (Cz @ y_zero + cz <= _FEAS_TOL).all():
            y = y_zero
    if y is None:
        y = _phase1(Cz, cz)
        if y is None:
            return QpSolution(x=None, status="infeasible")

    # initial working set: active constraints, preferring the warm set,
    # filtered to linear independence (lowest index first)
    act_vals = Cz @ y + cz
    active_now = [j for j in range(k) if act_vals[j] > -_ACTIVE_TOL]
    if active0:
        pref = [j for j in active0 if j in active_now]
        rest = [j for j in active_now if j not in pref]
        candidates = sorted(pref) + sorted(rest)
    else:
        candidates = active_now
    W = _independent_rows(Cz, candidates)

    limit = max_iter if max_iter is not None else 50 + 10 * (d + e + k)
    lam_w = np.zeros(len(W))
    for it in range(1, limit + 1):
        Aw = Cz[W] if W else np.zeros((0, nz))
        p_step, lam_w = _solve_eqp(Gz, Gz @ y + gz, Aw)
        if len(W) == nz:
            # a full independent working set pins the point exactly
            p_step = np.zeros(nz)
        # scale-aware null-step test: the KKT solve's roundoff in p grows
        # with the iterate and multiplier magnitudes
        step_scale = 1.0 + float(np.abs(y).max())
        if lam_w.size:
            step_scale = max(step_scale, 1e-6 * float(np.abs(lam_w).max()))
        if np.abs(p_step).max() <= _STEP_TOL * step_scale:
            if len(W) == 0 or lam_w.min() >= -_MULT_TOL:
                return finish(y, W, lam_w, it)
            # drop most negative multiplier, lowest index on ties
            worst = lam_w.min()
            drop_pos = min(
                (pos for pos in range(len(W)) if lam_w[pos] <= worst + 1e-15),
                key=lambda pos: W[pos],
            )
            W.pop(drop_pos)
            continue
        # step toward the subproblem optimum until a constraint blocks
        alpha = 1.0
        blocker = -1
        for j in range(k):
            if j in W:
                continue
            cp = Cz[j] @ p_step
            if cp > 1e-12:
                a_j = (-cz[j] - Cz[j] @ y) / cp
                if a_j < alpha - 1e-15:
                    alpha = max(a_j, 0.0)
                    blocker = j
        y = y + alpha * p_step
        if blocker >= 0:
            W.append(blocker)
    return finish(y, W, lam_w, limit, status="max_iter")
