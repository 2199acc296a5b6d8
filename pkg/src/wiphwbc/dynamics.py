"""Minimal-coordinate dynamics of the planar n-link chain on a wheel pair.

Generalized coordinates are (x, q1..qn): axle position plus joint angles,
with absolute link angles phi_k = q1 + ... + qk measured from vertical.
The wheel pair rolls without slip, so wheel spin is x/R and the pair
contributes 2*m_w + 2*I_w/R^2 to the (x, x) mass matrix entry.  The model is

    A(q) qddot_min + C(q, qdot) qdot_min + Q(q) = B tau + gamma_fric

where qdot_min = (xdot, qdot), B maps joint torques to generalized forces
(the wheel-pair torque tau_1 pushes the cart with -tau_1/R and reacts on the
base link with +tau_1), and gamma_fric = -diag(0, damping) qdot_min is
viscous joint damping.

A is assembled from per-link COM Jacobians; C comes from Christoffel symbols
of the exact analytic dA/dq, so qdot^T (Adot - 2C) qdot vanishes to machine
precision and unforced frictionless rollouts conserve energy.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .model import RobotDescription, RobotState

__all__ = [
    "LinkKinematics",
    "DynamicsTerms",
    "ComKinematics",
    "EndEffectorKinematics",
    "Energy",
    "DegenerateConfigError",
    "link_poses",
    "mass_matrix",
    "bias_terms",
    "dynamics_terms",
    "input_matrix",
    "tau_to_generalized",
    "forward_dynamics",
    "total_energy",
    "com_state",
    "ee_state",
    "full_zero_dynamics_residual",
]


class DegenerateConfigError(RuntimeError):
    """Configuration where the COM pendulum angle is undefined."""


@dataclass(frozen=True)
class LinkKinematics:
    """Forward kinematics of every link, world frame."""
    joints: np.ndarray   # (n, 2) inboard joint positions; joints[0] = (x, R)
    angles: np.ndarray   # (n,) absolute link angles from vertical
    coms: np.ndarray     # (n, 2) link COM positions


@dataclass(frozen=True)
class DynamicsTerms:
    """Mass matrix, bias terms, and their blocks at one state.

    h = C qdot_min + Q - gamma_fric is the lumped bias that appears on the
    left side of the model; forward dynamics solves A acc = B tau - h.
    """
    A: np.ndarray        # (n+1, n+1) symmetric positive definite
    a_xx: float          # scalar block A[0, 0]
    a_xq: np.ndarray     # (n,) coupling block A[0, 1:]
    A_qq: np.ndarray     # (n, n) joint-space block
    C: np.ndarray        # (n+1, n+1) Coriolis/centrifugal matrix
    Q_grav: np.ndarray   # (n+1,) gravity generalized forces
    friction: np.ndarray  # (n+1,) generalized friction force, -diag(0,d) qdot
    h: np.ndarray        # (n+1,) = C qdot_min + Q_grav - friction


@dataclass(frozen=True)
class ComKinematics:
    """Whole-chain COM seen as a point-mass pendulum about the axle."""
    mass: float          # total chain mass M
    x_com: float         # COM horizontal offset from the axle
    z_com: float         # COM height above the axle
    length: float        # pendulum length L = hypot(x_com, z_com)
    theta: float         # COM angle from vertical, atan2(x_com, z_com)
    thetadot: float
    J: np.ndarray        # (2, n) Jacobian of (x_com, z_com) w.r.t. q
    Jdot_qdot: np.ndarray  # (2,) = d/dt(J) qdot, for acceleration-level tasks


@dataclass(frozen=True)
class EndEffectorKinematics:
    """Tip of the last link, measured relative to the axle."""
    pos: np.ndarray      # (2,) tip position relative to (x, R)
    vel: np.ndarray      # (2,)
    phi: float           # absolute tip orientation, sum of joint angles
    phidot: float
    J: np.ndarray        # (2, n) position Jacobian w.r.t. q
    Jdot_qdot: np.ndarray  # (2,)


@dataclass(frozen=True)
class Energy:
    kinetic: float
    potential: float

    @property
    def total(self) -> float:
        return self.kinetic + self.potential


# --- per-description constants ----------------------------------------------

class _Engine:
    def __init__(self, desc: RobotDescription):
        n = desc.n
        self.n = n
        self.m = np.array([lk.mass for lk in desc.links])
        self.Ic = np.array([lk.inertia_com for lk in desc.links])
        self.l = np.array([lk.length for lk in desc.links])
        self.lc = np.array([lk.com_offset for lk in desc.links])
        self.damp = desc.damping_vector()
        self.g = desc.gravity
        self.R = desc.wheel.radius
        self.wheel_inertia_eff = 2.0 * desc.wheel.mass + 2.0 * desc.wheel.inertia / self.R**2
        self.M_total = float(self.m.sum())

        # W[k, j]: lever arm of angle phi_j in the COM position of link k
        # (l_j for joints below the link, lc_k for its own joint, 0 above).
        W = np.zeros((n, n))
        for k in range(n):
            W[k, :k] = self.l[:k]
            W[k, k] = self.lc[k]
        self.W = W
        self.lower = np.tril(np.ones((n, n)))      # lower[k, i] = 1 for i <= k
        idx = np.arange(n)
        self.maxidx = np.maximum.outer(idx, idx)   # for d2/dq_i dq_m sums

        # B maps joint torques to generalized forces on (x, q1..qn).
        B = np.zeros((n + 1, n))
        B[0, 0] = -1.0 / self.R
        B[1:, :] = np.eye(n)
        self.B = B


@functools.lru_cache(maxsize=64)
def _engine(desc: RobotDescription) -> _Engine:
    return _Engine(desc)


class _Kinematics:
    """Per-state trig tables and COM Jacobians shared by all queries."""

    def __init__(self, eng: _Engine, q: np.ndarray):
        phi = np.cumsum(q)
        self.phi = phi
        self.sphi = np.sin(phi)
        self.cphi = np.cos(phi)
        Ws = eng.W * self.sphi          # (n, n)
        Wc = eng.W * self.cphi
        # Jx[k, i] = d com_x(k) / dq_i = sum_{j >= i} W[k, j] cos(phi_j)
        self.Jx = np.cumsum(Wc[:, ::-1], axis=1)[:, ::-1]
        self.Jz = -np.cumsum(Ws[:, ::-1], axis=1)[:, ::-1]
        self.com_x_rel = Ws.sum(axis=1)  # COM offsets from the axle
        self.com_z_rel = Wc.sum(axis=1)


def _kin(desc: RobotDescription, q: np.ndarray) -> tuple[_Engine, _Kinematics]:
    eng = _engine(desc)
    q = np.asarray(q, dtype=float)
    if q.shape != (eng.n,):
        raise ValueError(f"expected q of shape ({eng.n},), got {q.shape}")
    return eng, _Kinematics(eng, q)


# --- kinematic queries --------------------------------------------------------

def link_poses(desc: RobotDescription, s: RobotState) -> LinkKinematics:
    """World-frame joint positions, absolute angles, and COM positions."""
    eng, kin = _kin(desc, s.q)
    n = eng.n
    joints = np.zeros((n, 2))
    joints[0] = (s.x, eng.R)
    steps = np.column_stack((eng.l * kin.sphi, eng.l * kin.cphi))
    if n > 1:
        joints[1:] = joints[0] + np.cumsum(steps[:-1], axis=0)
    coms = np.column_stack((s.x + kin.com_x_rel, eng.R + kin.com_z_rel))
    return LinkKinematics(joints=joints, angles=kin.phi.copy(), coms=coms)


def input_matrix(desc: RobotDescription) -> np.ndarray:
    """B: joint torques -> generalized forces on (x, q), shape (n+1, n)."""
    return _engine(desc).B.copy()


def tau_to_generalized(desc: RobotDescription, tau: np.ndarray) -> np.ndarray:
    tau = np.asarray(tau, dtype=float)
    if tau.shape != (desc.n,):
        raise ValueError(f"expected {desc.n} torques, got shape {tau.shape}")
    return _engine(desc).B @ tau


def _mass_blocks(eng: _Engine, kin: _Kinematics):
    a_xx = eng.wheel_inertia_eff + eng.M_total
    a_xq = eng.m @ kin.Jx
    A_qq = (
        np.einsum("k,ki,kj->ij", eng.m, kin.Jx, kin.Jx)
        + np.einsum("k,ki,kj->ij", eng.m, kin.Jz, kin.Jz)
        + np.einsum("k,ki,kj->ij", eng.Ic, eng.lower, eng.lower)
    )
    return a_xx, a_xq, A_qq


def _assemble_A(a_xx: float, a_xq: np.ndarray, A_qq: np.ndarray) -> np.ndarray:
    n = a_xq.shape[0]
    A = np.empty((n + 1, n + 1))
    A[0, 0] = a_xx
    A[0, 1:] = a_xq
    A[1:, 0] = a_xq
    A[1:, 1:] = A_qq
    return A


def mass_matrix(desc: RobotDescription, s: RobotState) -> np.ndarray:
    """Symmetric positive definite mass matrix, shape (n+1, n+1)."""
    eng, kin = _kin(desc, s.q)
    return _assemble_A(*_mass_blocks(eng, kin))


def dynamics_terms(desc: RobotDescription, s: RobotState) -> DynamicsTerms:
    """Mass matrix plus all bias terms at the given state."""
    eng, kin = _kin(desc, s.q)
    n = eng.n
    a_xx, a_xq, A_qq = _mass_blocks(eng, kin)
    A = _assemble_A(a_xx, a_xq, A_qq)

    # dA/dq_m from the exact second derivatives of the COM positions:
    # d(Jx[k,i])/dq_m = Jz[k, max(i,m)], d(Jz[k,i])/dq_m = -Jx[k, max(i,m)].
    Gx = kin.Jz[:, eng.maxidx]           # (n, n, n), axes (link, i, m)
    Gz = -kin.Jx[:, eng.maxidx]
    t1 = np.einsum("k,kim,kj->mij", eng.m, Gx, kin.Jx)
    t2 = np.einsum("k,kim,kj->mij", eng.m, Gz, kin.Jz)
    dAqq = t1 + t1.transpose(0, 2, 1) + t2 + t2.transpose(0, 2, 1)  # (m, i, j)
    dax = np.einsum("k,kim->mi", eng.m, Gx)                          # (m, i)

    qdot = s.qdot
    xdot = s.xdot
    # Christoffel assembly: C = (Adot + E - E^T) / 2 with
    # E[i, j] = sum_m dA[i, m]/dq_j qdot_min[m]; coordinate x contributes no
    # derivatives, so only joint columns of E are populated.
    adot_xq = np.einsum("mi,m->i", dax, qdot)
    Adot_qq = np.einsum("mij,m->ij", dAqq, qdot)
    E_top = dax @ qdot                                   # E[0, 1:]
    E_qq = xdot * dax.T + np.einsum("mil,l->im", dAqq, qdot)

    C = np.zeros((n + 1, n + 1))
    C[0, 1:] = 0.5 * (adot_xq + E_top)
    C[1:, 0] = 0.5 * (adot_xq - E_top)
    C[1:, 1:] = 0.5 * (Adot_qq + E_qq - E_qq.T)

    Q = np.zeros(n + 1)
    Q[1:] = eng.g * (eng.m @ kin.Jz)

    friction = np.zeros(n + 1)
    friction[1:] = -eng.damp * qdot

    vmin = np.empty(n + 1)
    vmin[0] = xdot
    vmin[1:] = qdot
    h = C @ vmin + Q - friction

    return DynamicsTerms(A=A, a_xx=a_xx, a_xq=a_xq, A_qq=A_qq,
                         C=C, Q_grav=Q, friction=friction, h=h)


def bias_terms(desc: RobotDescription, s: RobotState) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(C, Q_grav, friction) at the state; see DynamicsTerms for conventions."""
    t = dynamics_terms(desc, s)
    return t.C, t.Q_grav, t.friction


def forward_dynamics(desc: RobotDescription, s: RobotState, tau: np.ndarray) -> np.ndarray:
    """Accelerations (xddot, qddot...) under joint torques tau, shape (n+1,)."""
    t = dynamics_terms(desc, s)
    rhs = tau_to_generalized(desc, tau) - t.h
    return np.linalg.solve(t.A, rhs)


def total_energy(desc: RobotDescription, s: RobotState) -> Energy:
    """Kinetic energy (1/2 v^T A v) and chain gravitational potential."""
    eng, kin = _kin(desc, s.q)
    a_xx, a_xq, A_qq = _mass_blocks(eng, kin)
    v = s.minimal_velocity()
    kinetic = 0.5 * (a_xx * v[0] ** 2
                     + 2.0 * v[0] * (a_xq @ v[1:])
                     + v[1:] @ A_qq @ v[1:])
    potential = float(eng.g * (eng.m @ (eng.R + kin.com_z_rel)))
    return Energy(kinetic=float(kinetic), potential=potential)


def com_state(desc: RobotDescription, s: RobotState) -> ComKinematics:
    """Whole-chain COM pendulum quantities about the axle.

    Raises DegenerateConfigError when the COM sits on the axle or at axle
    height (z_com ~ 0), where the pendulum angle is undefined.
    """
    eng, kin = _kin(desc, s.q)
    M = eng.M_total
    X = float(eng.m @ kin.com_x_rel) / M
    Z = float(eng.m @ kin.com_z_rel) / M
    L = math.hypot(X, Z)
    if L < 1e-9 or abs(Z) < 1e-9:
        raise DegenerateConfigError(
            f"COM pendulum angle undefined (x_com={X:.3g}, z_com={Z:.3g})")
    Jx = (eng.m @ kin.Jx) / M
    Jz = (eng.m @ kin.Jz) / M
    J = np.vstack((Jx, Jz))
    vel = J @ s.qdot
    theta = math.atan2(X, Z)
    # thetadot = (z Xdot - x Zdot)/L^2; equals the (cos theta / z)[cos, -sin]
    # form wherever both are defined.
    thetadot = (Z * vel[0] - X * vel[1]) / (L * L)
    # Jdot qdot from the exact second derivatives (same identities as in
    # dynamics_terms, contracted twice with qdot).
    Gx = kin.Jz[:, eng.maxidx]
    Gz = -kin.Jx[:, eng.maxidx]
    d2x = np.einsum("k,kim->im", eng.m, Gx) / M
    d2z = np.einsum("k,kim->im", eng.m, Gz) / M
    Jdot_qdot = np.array([s.qdot @ d2x @ s.qdot, s.qdot @ d2z @ s.qdot])
    return ComKinematics(mass=M, x_com=X, z_com=Z, length=L,
                         theta=theta, thetadot=float(thetadot),
                         J=J, Jdot_qdot=Jdot_qdot)


def ee_state(desc: RobotDescription, s: RobotState) -> EndEffectorKinematics:
    """Tip of the last link relative to the axle, with Jacobians."""
    eng, kin = _kin(desc, s.q)
    lx = eng.l * kin.sphi
    lz = eng.l * kin.cphi
    pos = np.array([lx.sum(), lz.sum()])
    # J[0, i] = sum_{j >= i} l_j cos phi_j, J[1, i] = -sum_{j >= i} l_j sin phi_j
    Jx = np.cumsum((eng.l * kin.cphi)[::-1])[::-1]
    Jz = -np.cumsum((eng.l * kin.sphi)[::-1])[::-1]
    J = np.vstack((Jx, Jz))
    vel = J @ s.qdot
    # second derivatives: d2x[i, m] = -sum_{j >= max(i,m)} l_j sin phi_j
    revx = np.cumsum((eng.l * kin.sphi)[::-1])[::-1]
    revz = np.cumsum((eng.l * kin.cphi)[::-1])[::-1]
    d2x = -revx[eng.maxidx]
    d2z = -revz[eng.maxidx]
    Jdot_qdot = np.array([s.qdot @ d2x @ s.qdot, s.qdot @ d2z @ s.qdot])
    phi = float(kin.phi[-1])
    phidot = float(s.qdot.sum())
    return EndEffectorKinematics(pos=pos, vel=vel, phi=phi, phidot=phidot,
                                 J=J, Jdot_qdot=Jdot_qdot)


def full_zero_dynamics_residual(desc: RobotDescription, s: RobotState,
                                acc: np.ndarray) -> float:
    """Torque-free combination R*(x-row) + (q1-row) of the full model.

    Both rows of A acc + h receive the wheel torque with opposite leverage
    (-tau_1/R and +tau_1), so the combination is independent of actuation and
    must vanish along any dynamically consistent trajectory.  At rest it
    reduces to -M g x_com.
    """
    acc = np.asarray(acc, dtype=float)
    if acc.shape != (desc.n + 1,):
        raise ValueError(f"expected acc of shape ({desc.n + 1},), got {acc.shape}")
    t = dynamics_terms(desc, s)
    rows = t.A @ acc + t.h
    return float(desc.wheel.radius * rows[0] + rows[1])
