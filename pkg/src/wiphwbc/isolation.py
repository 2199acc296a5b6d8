"""Exact elimination of the unactuated heading coordinate.

The wheel torque enters the full model twice: as -tau_1/R on the x row and as
+tau_1 on the base-joint row.  Solving the x row for xddot and substituting
into the joint rows yields an n-dimensional, fully actuated model

    Acal qddot + P h = Gamma

with Acal = (I - beta Bmat) Astar_qq and P = (I - beta Bmat) [-a_xq/a_xx | I],
where Astar_qq = A_qq - a_xq a_xq^T / a_xx is the heading-eliminated joint
mass matrix, Bmat has a_xq/(R a_xx) as its first column and zeros elsewhere,
alpha = a_xq[0]/(R a_xx) and beta = 1/(1 + alpha).  Acal is not symmetric;
the forward map solves it by LU.  Given qddot, the heading acceleration is
recovered from the x row, closing an exact round trip with the full model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import DynamicsTerms, dynamics_terms
from .model import RobotDescription, RobotState

__all__ = [
    "IsolatedDynamics",
    "isolate",
    "isolate_at",
    "inverse_dynamics",
    "forward_joint_dynamics",
    "heading_acceleration",
    "torque_constraint_rows",
]


@dataclass(frozen=True)
class IsolatedDynamics:
    """Joint-space model with the heading coordinate eliminated."""
    Acal: np.ndarray     # (n, n) isolated inertia, generally asymmetric
    P: np.ndarray        # (n, n+1) bias projector
    bias: np.ndarray     # (n,) = P h
    alpha: float         # a_xq[0] / (R a_xx)
    beta: float          # 1 / (1 + alpha)
    # carried along for heading recovery:
    a_xx: float
    a_xq: np.ndarray     # (n,)
    h_x: float           # x row of the lumped bias
    wheel_radius: float


def isolate(terms: DynamicsTerms, wheel_radius: float,
            bias_full: np.ndarray | None = None) -> IsolatedDynamics:
    """Build the isolated model from full-model terms.

    bias_full defaults to terms.h; passing a custom (n+1,) vector lets
    callers re-bias the same inertia (e.g. gravity-only).
    """
    h = terms.h if bias_full is None else np.asarray(bias_full, dtype=float)
    n = terms.a_xq.shape[0]
    if h.shape != (n + 1,):
        raise ValueError(f"expected bias of shape ({n + 1},), got {h.shape}")
    a_xx = terms.a_xx
    a_xq = terms.a_xq
    R = wheel_radius

    alpha = a_xq[0] / (R * a_xx)
    beta = 1.0 / (1.0 + alpha)
    Astar = terms.A_qq - np.outer(a_xq, a_xq) / a_xx
    # (I - beta Bmat) with Bmat = [a_xq/(R a_xx) | 0]: identity minus a rank-1
    # update touching only the first column.
    col = a_xq / (R * a_xx)
    Acal = Astar - beta * np.outer(col, Astar[0])
    P0 = np.hstack((-(a_xq / a_xx)[:, None], np.eye(n)))
    P = P0 - beta * np.outer(col, P0[0])
    bias = P @ h
    return IsolatedDynamics(Acal=Acal, P=P, bias=bias, alpha=float(alpha),
                            beta=float(beta), a_xx=float(a_xx),
                            a_xq=a_xq.copy(), h_x=float(h[0]),
                            wheel_radius=R)


def isolate_at(desc: RobotDescription, s: RobotState) -> IsolatedDynamics:
    """Convenience: dynamics_terms + isolate at a state."""
    return isolate(dynamics_terms(desc, s), desc.wheel.radius)


def inverse_dynamics(iso: IsolatedDynamics, qddot: np.ndarray) -> np.ndarray:
    """Joint torques realizing the commanded joint accelerations."""
    qddot = np.asarray(qddot, dtype=float)
    return iso.Acal @ qddot + iso.bias


def forward_joint_dynamics(iso: IsolatedDynamics, tau: np.ndarray) -> np.ndarray:
    """Joint accelerations under joint torques (LU solve; Acal asymmetric)."""
    tau = np.asarray(tau, dtype=float)
    return np.linalg.solve(iso.Acal, tau - iso.bias)


def heading_acceleration(iso: IsolatedDynamics, qddot: np.ndarray,
                         tau_wheel: float) -> float:
    """xddot recovered from the full model's x row."""
    qddot = np.asarray(qddot, dtype=float)
    return float((-tau_wheel / iso.wheel_radius - iso.h_x
                  - iso.a_xq @ qddot) / iso.a_xx)


def torque_constraint_rows(iso: IsolatedDynamics,
                           limits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Torque limits as inequality rows C qddot + c <= 0 in qddot.

    Encodes -limits <= Acal qddot + bias <= limits, 2n rows.  Rows for
    non-finite limits are dropped.
    """
    limits = np.asarray(limits, dtype=float)
    C = np.vstack((iso.Acal, -iso.Acal))
    c = np.concatenate((iso.bias - limits, -iso.bias - limits))
    keep = np.isfinite(np.concatenate((limits, limits)))
    return C[keep], c[keep]
