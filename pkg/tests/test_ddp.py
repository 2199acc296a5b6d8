import numpy as np
import pytest

from wiphwbc import ddp, wipm
from wiphwbc.model import default_description, upright_rest


@pytest.fixture(scope="module")
def params1():
    desc = default_description(1)
    return wipm.extract_params(desc, upright_rest(desc))


@pytest.fixture(scope="module")
def params7():
    desc = default_description(7)
    return wipm.extract_params(desc, upright_rest(desc))


def test_cost_spec_validation():
    good = np.ones(4)
    with pytest.raises(ValueError):
        ddp.CostSpec(run_weight_diag=-good, control_weight=0.1,
                     term_weight_diag=good, reference=np.zeros(4))
    with pytest.raises(ValueError):
        ddp.CostSpec(run_weight_diag=np.ones(3), control_weight=0.1,
                     term_weight_diag=good, reference=np.zeros(4))
    with pytest.raises(ValueError):
        ddp.CostSpec(run_weight_diag=good, control_weight=-1.0,
                     term_weight_diag=good, reference=np.zeros(4))
    with pytest.raises(ValueError):
        ddp.CostSpec(run_weight_diag=good, control_weight=0.1,
                     term_weight_diag=good, reference=np.full(4, np.nan))


def test_reference_clamps_past_end():
    seq = np.arange(12.0).reshape(3, 4)
    spec = ddp.CostSpec(run_weight_diag=np.ones(4), control_weight=0.1,
                        term_weight_diag=np.ones(4), reference=seq)
    np.testing.assert_array_equal(spec.reference_at(0), seq[0])
    np.testing.assert_array_equal(spec.reference_at(2), seq[2])
    np.testing.assert_array_equal(spec.reference_at(50), seq[2])


def test_already_optimal_is_zero_cost(params1):
    goal = np.array([0.0, 0.0, 2.0, 0.0])
    cost = ddp.goal_cost(goal)
    traj = ddp.solve(params1, goal, cost, n_steps=50, dt=0.01)
    assert traj.converged
    assert traj.iterations <= 2
    assert traj.cost == 0.0
    np.testing.assert_array_equal(traj.controls, np.zeros(50))


def test_one_step_matches_quadratic_oracle(params1):
    # dynamics are affine in u for a single Euler step, so the total cost
    # is an exact scalar quadratic; its vertex from three samples is an
    # independent closed-form minimizer
    x0 = np.array([0.05, -0.1, 0.2, 0.1])
    cost = ddp.goal_cost(np.zeros(4))
    dt = 0.01

    def total(u):
        states = ddp.rollout(params1, x0, np.array([u]), dt)
        return ddp.trajectory_cost(cost, states, np.array([u]))

    jm, j0, jp = total(-1.0), total(0.0), total(1.0)
    u_star = 0.5 * (jm - jp) / (jm - 2.0 * j0 + jp)

    opts = ddp.DdpOptions(tol_cost=1e-18, init_lambda=1e-12, max_iters=50)
    traj = ddp.solve(params1, x0, cost, n_steps=1, dt=dt, opts=opts)
    assert traj.converged
    assert abs(traj.controls[0] - u_star) < 1e-10


def test_goto_goal_two_meters(params7):
    goal = np.array([0.0, 0.0, 2.0, 0.0])
    traj = ddp.solve(params7, np.zeros(4), ddp.goal_cost(goal),
                     n_steps=2000, dt=0.01)
    assert abs(traj.states[-1, wipm.POS] - 2.0) < 0.01
    assert abs(traj.states[-1, wipm.THETA]) < 0.01
    # accepted costs strictly decrease by construction
    assert np.all(np.diff(traj.cost_history) < 0)
    assert traj.cost == pytest.approx(
        ddp.trajectory_cost(ddp.goal_cost(goal), traj.states, traj.controls))


def test_states_are_exact_rollout(params1):
    goal = np.array([0.0, 0.0, 0.5, 0.0])
    traj = ddp.solve(params1, np.zeros(4), ddp.goal_cost(goal),
                     n_steps=200, dt=0.01)
    states = ddp.rollout(params1, traj.states[0], traj.controls, 0.01)
    np.testing.assert_array_equal(traj.states, states)


def test_gradient_matches_finite_differences(params1, rng):
    cost = ddp.goal_cost(np.array([0.0, 0.0, 0.3, 0.0]))
    x0 = np.array([0.02, 0.0, 0.0, 0.0])
    dt = 0.01
    controls = 0.5 * rng.standard_normal(20)
    grad = ddp.control_gradient(params1, x0, controls, cost, dt)

    def total(u):
        states = ddp.rollout(params1, x0, u, dt)
        return ddp.trajectory_cost(cost, states, u)

    fd = np.empty_like(grad)
    h = 1e-6
    for i in range(controls.size):
        up = controls.copy()
        un = controls.copy()
        up[i] += h
        un[i] -= h
        fd[i] = (total(up) - total(un)) / (2.0 * h)
    scale = max(1.0, np.abs(fd).max())
    assert np.abs(grad - fd).max() / scale < 1e-4


def test_feedback_beats_open_loop_on_perturbed_start(params1, rng):
    goal = np.array([0.0, 0.0, 0.5, 0.0])
    cost = ddp.goal_cost(goal)
    traj = ddp.solve(params1, np.zeros(4), cost, n_steps=300, dt=0.01)
    delta = rng.standard_normal(4)
    delta *= 1e-3 / np.linalg.norm(delta)
    x0 = traj.states[0] + delta

    open_states = ddp.rollout(params1, x0, traj.controls, 0.01)
    open_cost = ddp.trajectory_cost(cost, open_states, traj.controls)

    closed_states = np.empty_like(traj.states)
    closed_controls = np.empty_like(traj.controls)
    closed_states[0] = x0
    for i in range(traj.horizon):
        closed_controls[i] = traj.controls[i] + traj.feedback[i] @ (
            closed_states[i] - traj.states[i])
        closed_states[i + 1] = wipm.step(closed_states[i],
                                         float(closed_controls[i]),
                                         params1, 0.01)
    closed_cost = ddp.trajectory_cost(cost, closed_states, closed_controls)
    assert closed_cost < open_cost


def test_deterministic(params1):
    goal = np.array([0.0, 0.0, 0.4, 0.0])
    a = ddp.solve(params1, np.zeros(4), ddp.goal_cost(goal),
                  n_steps=150, dt=0.01)
    b = ddp.solve(params1, np.zeros(4), ddp.goal_cost(goal),
                  n_steps=150, dt=0.01)
    np.testing.assert_array_equal(a.states, b.states)
    np.testing.assert_array_equal(a.controls, b.controls)
    assert a.cost == b.cost
    assert a.iterations == b.iterations


def test_time_varying_reference(params1):
    # ramp in position; solver should follow without error growth
    n_steps = 200
    ref = np.zeros((n_steps + 1, 4))
    ref[:, wipm.POS] = np.linspace(0.0, 0.2, n_steps + 1)
    ref[:, wipm.VEL] = 0.2 / (n_steps * 0.01)
    cost = ddp.CostSpec(run_weight_diag=np.array([50.0, 1.0, 10.0, 1.0]),
                        control_weight=0.1,
                        term_weight_diag=1e4 * np.ones(4),
                        reference=ref)
    traj = ddp.solve(params1, np.zeros(4), cost, n_steps=n_steps, dt=0.01)
    assert np.isfinite(traj.cost)
    assert abs(traj.states[-1, wipm.POS] - 0.2) < 0.02


def test_warm_start_controls_accepted(params1):
    goal = np.array([0.0, 0.0, 0.5, 0.0])
    cost = ddp.goal_cost(goal)
    first = ddp.solve(params1, np.zeros(4), cost, n_steps=200, dt=0.01)
    opts = ddp.DdpOptions(init_controls=first.controls)
    again = ddp.solve(params1, np.zeros(4), cost, n_steps=200, dt=0.01,
                      opts=opts)
    assert again.cost <= first.cost + 1e-12
    assert again.iterations <= first.iterations
