"""Planar forward kinematics from logged joint angles.

Joint angles are relative, measured from the upright continuation of the
parent link; the absolute angle of link k from the vertical is the running
sum q_1 + ... + q_k. All positions here are axle-relative, matching the
end-effector columns of the simulation log: the wheel axle is the origin,
z points up. World placement (adding base x and axle height) is left to the
drawing code.
"""

from __future__ import annotations

import numpy as np

from .robot import RobotGeometry


def _lengths(geom: RobotGeometry) -> np.ndarray:
    return np.array([link.length for link in geom.links])


def joint_points(geom: RobotGeometry, q: np.ndarray) -> np.ndarray:
    """Axle-relative joint positions, shape (n+1, 2): axle, then link tips."""
    q = np.asarray(q, dtype=float)
    if q.shape != (geom.n,):
        raise ValueError(f"expected {geom.n} joint angles, got shape {q.shape}")
    phi = np.cumsum(q)
    steps = _lengths(geom)[:, None] * np.column_stack((np.sin(phi), np.cos(phi)))
    points = np.zeros((geom.n + 1, 2))
    points[1:] = np.cumsum(steps, axis=0)
    return points


def link_com_points(geom: RobotGeometry, q: np.ndarray) -> np.ndarray:
    """Axle-relative link centre-of-mass positions, shape (n, 2)."""
    q = np.asarray(q, dtype=float)
    phi = np.cumsum(q)
    base = joint_points(geom, q)[:-1]
    offs = np.array([link.com_offset for link in geom.links])
    return base + offs[:, None] * np.column_stack((np.sin(phi), np.cos(phi)))


def chain_com(geom: RobotGeometry, q: np.ndarray) -> np.ndarray:
    """Mass-weighted centre of mass of the link chain, axle-relative."""
    masses = np.array([link.mass for link in geom.links])
    return masses @ link_com_points(geom, q) / masses.sum()


def end_effector(geom: RobotGeometry, q: np.ndarray) -> np.ndarray:
    """Axle-relative tip of the last link, shape (2,)."""
    return joint_points(geom, q)[-1]


def end_effector_angle(q: np.ndarray) -> float:
    """Absolute orientation of the last link from the vertical."""
    return float(np.asarray(q, dtype=float).sum())


def end_effector_path(geom: RobotGeometry, Q: np.ndarray) -> np.ndarray:
    """Axle-relative end-effector positions for a whole log, shape (T, 2).

    Q has one row per log sample and one column per joint. The running sums
    are taken in the same order as the scalar routine so the two agree to
    the last bit.
    """
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[1] != geom.n:
        raise ValueError(f"expected (T, {geom.n}) joint angles, got shape {Q.shape}")
    phi = np.cumsum(Q, axis=1)
    l = _lengths(geom)
    x = np.cumsum(l * np.sin(phi), axis=1)[:, -1]
    z = np.cumsum(l * np.cos(phi), axis=1)[:, -1]
    return np.column_stack((x, z))
