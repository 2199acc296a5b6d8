import numpy as np
import pytest

from _oracles import random_state
from wiphwbc import dynamics, isolation, model


def test_round_trip_with_full_model(any_robot, rng):
    # forward full dynamics -> joint accelerations -> inverse isolated
    # dynamics must reproduce the torques; the heading row must reproduce xddot
    for _ in range(50):
        s = random_state(any_robot, rng, angle=0.8, vel=1.5)
        tau = rng.uniform(-5, 5, any_robot.n)
        acc = dynamics.forward_dynamics(any_robot, s, tau)
        iso = isolation.isolate_at(any_robot, s)
        tau_rec = isolation.inverse_dynamics(iso, acc[1:])
        np.testing.assert_allclose(tau_rec, tau, rtol=0, atol=1e-9)
        xdd = isolation.heading_acceleration(iso, acc[1:], tau[0])
        np.testing.assert_allclose(xdd, acc[0], rtol=0, atol=1e-9)


def test_forward_joint_dynamics_matches_full(any_robot, rng):
    for _ in range(20):
        s = random_state(any_robot, rng, angle=0.8, vel=1.5)
        tau = rng.uniform(-5, 5, any_robot.n)
        acc = dynamics.forward_dynamics(any_robot, s, tau)
        iso = isolation.isolate_at(any_robot, s)
        qdd = isolation.forward_joint_dynamics(iso, tau)
        np.testing.assert_allclose(qdd, acc[1:], atol=1e-9)


def test_elimination_identity():
    # (I - beta B)(I + B) = I by construction of beta
    d = model.default_description(3)
    s = model.RobotState(0.1, 0.2, np.array([0.3, -0.4, 0.2]), np.array([0.5, 0.1, -0.2]))
    t = dynamics.dynamics_terms(d, s)
    iso = isolation.isolate(t, d.wheel.radius)
    n = d.n
    Bmat = np.zeros((n, n))
    Bmat[:, 0] = t.a_xq / (d.wheel.radius * t.a_xx)
    lhs = (np.eye(n) - iso.beta * Bmat) @ (np.eye(n) + Bmat)
    np.testing.assert_allclose(lhs, np.eye(n), atol=1e-12)
    # and the isolated matrices match their definitions
    Astar = t.A_qq - np.outer(t.a_xq, t.a_xq) / t.a_xx
    np.testing.assert_allclose(iso.Acal, (np.eye(n) - iso.beta * Bmat) @ Astar, atol=1e-12)
    P0 = np.hstack((-(t.a_xq / t.a_xx)[:, None], np.eye(n)))
    np.testing.assert_allclose(iso.P, (np.eye(n) - iso.beta * Bmat) @ P0, atol=1e-12)


def test_single_link_closed_forms(robot1):
    s = model.RobotState(0.0, 0.0, np.zeros(1), np.zeros(1))
    iso = isolation.isolate_at(robot1, s)
    lk = robot1.links[0]
    w = robot1.wheel
    a_xx = 2 * w.mass + 2 * w.inertia / w.radius**2 + lk.mass
    alpha = lk.mass * lk.com_offset / (w.radius * a_xx)
    assert iso.alpha == pytest.approx(alpha, rel=1e-12)
    assert iso.beta == pytest.approx(1 / (1 + alpha), rel=1e-12)
    # upright: Acal = beta * (I_about_axle - a_xq^2/a_xx) > 0
    i_axle = lk.mass * lk.com_offset**2 + lk.inertia_com
    expect = iso.beta * (i_axle - (lk.mass * lk.com_offset) ** 2 / a_xx)
    assert iso.Acal[0, 0] == pytest.approx(expect, rel=1e-12)
    assert iso.Acal[0, 0] > 0.0


def test_holding_still_torque_single_link(robot1):
    # commanding qddot = 0 while tilted: tau_1 = -beta M g x_com
    s = model.RobotState(0.0, 0.0, np.array([0.2]), np.zeros(1))
    iso = isolation.isolate_at(robot1, s)
    tau = isolation.inverse_dynamics(iso, np.zeros(1))
    com = dynamics.com_state(robot1, s)
    expect = -iso.beta * com.mass * robot1.gravity * com.x_com
    np.testing.assert_allclose(tau[0], expect, rtol=1e-12)


def test_balanced_upright_needs_no_torque(any_robot):
    iso = isolation.isolate_at(any_robot, model.upright_rest(any_robot))
    np.testing.assert_allclose(
        isolation.inverse_dynamics(iso, np.zeros(any_robot.n)), 0.0, atol=1e-12)


def test_custom_bias_override(robot3):
    s = model.upright_rest(robot3)
    t = dynamics.dynamics_terms(robot3, s)
    iso = isolation.isolate(t, robot3.wheel.radius, bias_full=np.zeros(4))
    np.testing.assert_allclose(iso.bias, 0.0)
    with pytest.raises(ValueError):
        isolation.isolate(t, robot3.wheel.radius, bias_full=np.zeros(3))


def test_torque_constraint_rows(robot3, rng):
    s = random_state(robot3, rng, angle=0.5)
    iso = isolation.isolate_at(robot3, s)
    limits = np.array([10.0, np.inf, 5.0])
    C, c = isolation.torque_constraint_rows(iso, limits)
    assert C.shape == (4, 3)  # infinite rows dropped
    for _ in range(50):
        qdd = rng.uniform(-20, 20, 3)
        tau = isolation.inverse_dynamics(iso, qdd)
        inside = abs(tau[0]) <= 10.0 and abs(tau[2]) <= 5.0
        assert inside == bool((C @ qdd + c <= 1e-9).all())
