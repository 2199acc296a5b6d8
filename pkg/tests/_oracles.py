"""Independent reference implementations used only by the test suite.

Everything here is deliberately written with different machinery than the
package (complex-number kinematics, finite differences of scalar energies,
closed forms transcribed from a hand derivation) so agreement is evidence,
not tautology.
"""

from __future__ import annotations

import numpy as np

from wiphwbc.model import RobotDescription, RobotState


def fk_complex(desc: RobotDescription, x: float, q: np.ndarray):
    """Joint/COM positions via complex-number chain composition.

    A link at absolute angle a from vertical points along i*exp(-i*a)
    (= sin a + i cos a with the real axis horizontal).
    """
    joints = []
    coms = []
    angles = []
    z = complex(x, desc.wheel.radius)
    a = 0.0
    for k, lk in enumerate(desc.links):
        a += float(q[k])
        d = 1j * np.exp(-1j * a)
        joints.append(z)
        coms.append(z + lk.com_offset * d)
        angles.append(a)
        z = z + lk.length * d
    tip = z
    return (np.array([[c.real, c.imag] for c in joints]),
            np.array(angles),
            np.array([[c.real, c.imag] for c in coms]),
            np.array([tip.real, tip.imag]))


def potential_indep(desc: RobotDescription, x: float, q: np.ndarray) -> float:
    _, _, coms, _ = fk_complex(desc, x, q)
    m = np.array([lk.mass for lk in desc.links])
    return float(desc.gravity * (m @ coms[:, 1]))


def com_velocities_fd(desc: RobotDescription, x: float, q: np.ndarray,
                      v: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Link COM velocities along minimal velocity v = (xdot, qdot), by
    central differences of the complex-FK positions."""
    xp, qp = x + eps * v[0], q + eps * v[1:]
    xm, qm = x - eps * v[0], q - eps * v[1:]
    _, _, cp, _ = fk_complex(desc, xp, qp)
    _, _, cm, _ = fk_complex(desc, xm, qm)
    return (cp - cm) / (2.0 * eps)


def kinetic_indep(desc: RobotDescription, x: float, q: np.ndarray,
                  v: np.ndarray, eps: float = 1e-6) -> float:
    """Kinetic energy at minimal velocity v, fully independent of the package."""
    m = np.array([lk.mass for lk in desc.links])
    Ic = np.array([lk.inertia_com for lk in desc.links])
    vel = com_velocities_fd(desc, x, q, v, eps)
    omega = np.cumsum(v[1:])
    R = desc.wheel.radius
    t_wheel = 0.5 * (2.0 * desc.wheel.mass) * v[0] ** 2 \
        + 0.5 * (2.0 * desc.wheel.inertia) * (v[0] / R) ** 2
    return float(t_wheel
                 + 0.5 * (m @ (vel ** 2).sum(axis=1))
                 + 0.5 * (Ic @ omega ** 2))


def mass_matrix_fd(desc: RobotDescription, s: RobotState) -> np.ndarray:
    """Hessian of the independent kinetic energy in the minimal velocity.

    The energy is quadratic in v, so second differences with h = 1 are exact
    up to the O(eps^2) contamination of the position finite differences.
    """
    n = desc.n
    A = np.zeros((n + 1, n + 1))
    h = 1.0
    for i in range(n + 1):
        for j in range(i, n + 1):
            ei = np.zeros(n + 1)
            ej = np.zeros(n + 1)
            ei[i] = h
            ej[j] = h
            tpp = kinetic_indep(desc, s.x, s.q, ei + ej)
            tpm = kinetic_indep(desc, s.x, s.q, ei - ej)
            tmp = kinetic_indep(desc, s.x, s.q, -ei + ej)
            tmm = kinetic_indep(desc, s.x, s.q, -ei - ej)
            A[i, j] = A[j, i] = (tpp - tpm - tmp + tmm) / (4.0 * h * h)
    return A


def gravity_fd(desc: RobotDescription, s: RobotState,
               eps: float = 1e-6) -> np.ndarray:
    """dV/d(x, q) of the independent potential by central differences."""
    n = desc.n
    out = np.zeros(n + 1)
    vp = potential_indep(desc, s.x + eps, s.q)
    vm = potential_indep(desc, s.x - eps, s.q)
    out[0] = (vp - vm) / (2.0 * eps)
    for i in range(n):
        dq = np.zeros(n)
        dq[i] = eps
        out[1 + i] = (potential_indep(desc, s.x, s.q + dq)
                      - potential_indep(desc, s.x, s.q - dq)) / (2.0 * eps)
    return out


def accel_1link_closed_form(desc: RobotDescription, s: RobotState,
                            tau1: float) -> np.ndarray:
    """Hand-derived single-link accelerations (transcribed, not imported):

        a_xx xddot + b cos(q) qddot - b sin(q) qdot^2            = -tau1/R
        b cos(q) xddot + (m lc^2 + Ic) qddot - m g lc sin(q)     =  tau1 - d qdot
    """
    lk = desc.links[0]
    R = desc.wheel.radius
    a_xx = 2.0 * desc.wheel.mass + 2.0 * desc.wheel.inertia / R ** 2 + lk.mass
    b = lk.mass * lk.com_offset
    q, qd = float(s.q[0]), float(s.qdot[0])
    Amat = np.array([[a_xx, b * np.cos(q)],
                     [b * np.cos(q), lk.mass * lk.com_offset ** 2 + lk.inertia_com]])
    rhs = np.array([b * np.sin(q) * qd ** 2 - tau1 / R,
                    lk.mass * desc.gravity * lk.com_offset * np.sin(q)
                    + tau1 - lk.damping * qd])
    return np.linalg.solve(Amat, rhs)


def random_state(desc: RobotDescription, rng: np.random.Generator,
                 angle: float = 0.5, vel: float = 1.0) -> RobotState:
    n = desc.n
    return RobotState(x=float(rng.uniform(-1, 1)),
                      xdot=float(rng.uniform(-vel, vel)),
                      q=rng.uniform(-angle, angle, n),
                      qdot=rng.uniform(-vel, vel, n))
