"""Reduced model: the whole chain as one point-mass pendulum on the wheel pair.

At any configuration the chain is summarized by its total mass M, COM
pendulum length L and angle theta about the axle, and the chain's rotational
inertia about the axle I (the base-joint diagonal of the joint mass matrix).
Two dimensionless/length groups control the reduced dynamics:

    alpha = R (M + 2 m_w + 2 I_w / R^2) / (M L)        [dimensionless]
    beta  = I / (M L)                                  [length]

Adding R x (heading row) to the base row of the full model cancels the wheel
torque and leaves the torque-free zero dynamics; solved for the heading
acceleration with the COM angle acceleration u = thetaddot as input:

    xddot = (g sin(th) + R sin(th) thdot^2 - (beta + R cos(th)) u)
            / (alpha + cos(th))

The reduced state is X = (theta, thetadot, x, xdot); integration is explicit
Euler at the planner rate.  This model is exact for a single-link chain: the
wheel torque realizing a reduced trajectory is tau_1 = M Z xddot + I u
- M g X with (X, Z) the COM offsets, and feeding it back to the full model
reproduces the reduced trajectory to integrator precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import DegenerateConfigError, com_state, dynamics_terms
from .model import RobotDescription, RobotState

__all__ = [
    "THETA", "THETADOT", "POS", "VEL",
    "WipmParams",
    "extract_params",
    "planar_accel",
    "f_c",
    "step",
    "step_jacobians",
    "zero_dynamics_residual",
    "wheel_torque",
]

# layout of the reduced state vector X
THETA, THETADOT, POS, VEL = 0, 1, 2, 3


@dataclass(frozen=True)
class WipmParams:
    """Snapshot of the chain summarized as a wheeled pendulum."""
    mass: float          # total chain mass M
    x_com: float         # COM offsets from the axle at extraction time
    z_com: float
    length: float        # pendulum length L
    theta: float         # COM angle and rate at extraction time
    thetadot: float
    inertia: float       # chain rotational inertia about the axle I
    alpha: float
    beta: float
    wheel_radius: float
    gravity: float

    def state(self, x: float, xdot: float) -> np.ndarray:
        """Reduced state (theta, thetadot, x, xdot) at extraction time."""
        return np.array([self.theta, self.thetadot, x, xdot])

    @property
    def axle_inertia_eff(self) -> float:
        """a_xx of the full model, recovered from alpha."""
        return self.alpha * self.mass * self.length / self.wheel_radius


def extract_params(desc: RobotDescription, s: RobotState) -> WipmParams:
    """Summarize the current chain configuration as reduced-model parameters.

    Raises DegenerateConfigError when the COM is at or below axle height,
    where the pendulum abstraction breaks down.
    """
    com = com_state(desc, s)
    if com.z_com <= 0.0:
        raise DegenerateConfigError(
            f"COM not above the axle (z_com={com.z_com:.3g})")
    terms = dynamics_terms(desc, s)
    M, L = com.mass, com.length
    R = desc.wheel.radius
    alpha = R * terms.a_xx / (M * L)
    inertia = float(terms.A_qq[0, 0])
    beta = inertia / (M * L)
    return WipmParams(mass=M, x_com=com.x_com, z_com=com.z_com, length=L,
                      theta=com.theta, thetadot=com.thetadot,
                      inertia=inertia, alpha=alpha, beta=beta,
                      wheel_radius=R, gravity=desc.gravity)


def planar_accel(p: WipmParams, theta: float, thetadot: float, u: float) -> float:
    """Heading acceleration from the torque-free zero dynamics."""
    s, c = math.sin(theta), math.cos(theta)
    den = p.alpha + c
    if den <= 1e-9:
        raise DegenerateConfigError(
            f"reduced model singular: alpha + cos(theta) = {den:.3g}")
    R = p.wheel_radius
    return (p.gravity * s + R * s * thetadot * thetadot
            - (p.beta + R * c) * u) / den


def f_c(X: np.ndarray, u: float, p: WipmParams) -> np.ndarray:
    """Continuous-time reduced dynamics, Xdot = f_c(X, u)."""
    xddot = planar_accel(p, X[THETA], X[THETADOT], u)
    return np.array([X[THETADOT], u, X[VEL], xddot])


def step(X: np.ndarray, u: float, p: WipmParams, dt: float) -> np.ndarray:
    """Explicit Euler step of the reduced dynamics."""
    return X + dt * f_c(X, u, p)


def step_jacobians(X: np.ndarray, u: float, p: WipmParams,
                   dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Analytic (d step/dX, d step/du) for the Euler map."""
    th, w = X[THETA], X[THETADOT]
    s, c = math.sin(th), math.cos(th)
    R = p.wheel_radius
    den = p.alpha + c
    num = p.gravity * s + R * s * w * w - (p.beta + R * c) * u
    dacc_dth = (p.gravity * c + R * c * w * w + R * s * u) / den + num * s / (den * den)
    dacc_dw = 2.0 * R * s * w / den
    dacc_du = -(p.beta + R * c) / den

    fx = np.eye(4)
    fx[THETA, THETADOT] = dt
    fx[POS, VEL] = dt
    fx[VEL, THETA] = dt * dacc_dth
    fx[VEL, THETADOT] = dt * dacc_dw
    fu = np.zeros(4)
    fu[THETADOT] = dt
    fu[VEL] = dt * dacc_du
    return fx, fu


def zero_dynamics_residual(p: WipmParams, theta: float, thetadot: float,
                           xddot: float, thetaddot: float) -> float:
    """Pre-division zero-dynamics combination; zero along reduced trajectories.

    (R a_xx + M Z) xddot + (I + R M Z) thetaddot - R M X thetadot^2 - M g X,
    with X = L sin(theta), Z = L cos(theta).  At rest it equals -M g X.
    """
    X = p.length * math.sin(theta)
    Z = p.length * math.cos(theta)
    M = p.mass
    R = p.wheel_radius
    a_xx = p.axle_inertia_eff
    return ((R * a_xx + M * Z) * xddot + (p.inertia + R * M * Z) * thetaddot
            - R * M * X * thetadot * thetadot - M * p.gravity * X)


def wheel_torque(p: WipmParams, theta: float, thetadot: float,
                 xddot: float, thetaddot: float) -> float:
    """Wheel-pair torque from the base-joint row of the full model.

    tau_1 = M Z xddot + I thetaddot - M g X; exact for a single-link chain.
    """
    X = p.length * math.sin(theta)
    Z = p.length * math.cos(theta)
    return p.mass * Z * xddot + p.inertia * thetaddot - p.mass * p.gravity * X
