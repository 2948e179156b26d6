"""Structured QP solve: closed forms, saddle-point oracle, box handling."""

import numpy as np
import pytest

from plmpc.qp import QpError, QpProblem, solve
from plmpc.selftest import kkt_solve


def _scalar_problem(q, r, gain, offset, target, **kw):
    # one output, one control: y = offset + gain*u, cost q*(y-target)^2 + r*u^2
    cost = np.diag([q, r])
    lin = np.array([-2.0 * q * target, 0.0])
    a_eq = np.array([[1.0, -gain]])
    b_eq = np.array([offset])
    return QpProblem(cost, lin, a_eq, b_eq, **kw)


def _random_problem(rng, horizon, bounded=False):
    f_pred = np.tril(rng.normal(size=(horizon, horizon)) * 0.4, -1)
    g_pred = np.tril(rng.normal(size=(horizon, horizon)) * 0.8)
    diag = np.diag_indices(horizon)
    g_pred[diag] += np.sign(g_pred[diag]) + 0.5
    a_eq = np.hstack([np.eye(horizon) - f_pred, -g_pred])
    cost = np.zeros((2 * horizon, 2 * horizon))
    cost[:horizon, :horizon] = float(rng.uniform(0.2, 2.0)) * np.eye(horizon)
    cost[horizon:, horizon:] = float(rng.uniform(0.01, 1.0)) * np.eye(horizon)
    lin = np.concatenate([rng.normal(size=horizon), np.zeros(horizon)])
    b_eq = rng.normal(size=horizon)
    if bounded:
        lim = float(rng.uniform(0.1, 0.8))
        return QpProblem(cost, lin, a_eq, b_eq, u_min=-lim, u_max=lim)
    return QpProblem(cost, lin, a_eq, b_eq)


def _objective(problem, x):
    return float(x @ problem.cost_quad @ x + problem.cost_lin @ x)


# --- closed forms ---------------------------------------------------------------

def test_scalar_closed_form():
    # u* = q*gain*(target - offset) / (q*gain^2 + r)
    q, r, gain, offset, target = 1.0, 0.5, 2.0, -1.0, 3.0
    x, diag = solve(_scalar_problem(q, r, gain, offset, target))
    u_star = q * gain * (target - offset) / (q * gain ** 2 + r)
    assert x[1] == pytest.approx(u_star, abs=1e-12)
    assert x[0] == pytest.approx(offset + gain * u_star, abs=1e-12)
    assert not diag.ridge_applied
    assert diag.iterations == 1


def test_scalar_bound_clamps_active_side():
    problem = _scalar_problem(1.0, 0.5, 2.0, -1.0, 3.0, u_min=-1.0, u_max=1.0)
    x, diag = solve(problem)  # free optimum 16/9 sits above the box
    assert x[1] == pytest.approx(1.0, abs=1e-14)
    assert x[0] == pytest.approx(1.0, abs=1e-12)
    assert diag.active_bounds == 1


def test_wide_bounds_change_nothing():
    free, _ = solve(_scalar_problem(1.0, 0.5, 2.0, -1.0, 3.0))
    boxed, diag = solve(_scalar_problem(1.0, 0.5, 2.0, -1.0, 3.0,
                                        u_min=-100.0, u_max=100.0))
    assert np.allclose(free, boxed, atol=1e-12)
    assert diag.active_bounds == 0


def test_zero_effort_weight_reaches_target_exactly():
    x, _ = solve(_scalar_problem(1.0, 0.0, 2.0, -1.0, 3.0))
    assert x[0] == pytest.approx(3.0, abs=1e-12)


# --- oracle agreement --------------------------------------------------------------

def test_matches_saddle_point_oracle():
    rng = np.random.default_rng(23)
    for _ in range(120):
        problem = _random_problem(rng, int(rng.integers(1, 9)))
        x, _ = solve(problem)
        ref = kkt_solve(problem)
        assert np.max(np.abs(x - ref)) < 1e-9 * (1 + np.max(np.abs(ref)))
        assert np.max(np.abs(problem.a_eq @ x - problem.b_eq)) < 1e-10


def test_bounded_solution_beats_feasible_competitors():
    rng = np.random.default_rng(29)
    for _ in range(40):
        m = int(rng.integers(1, 6))
        problem = _random_problem(rng, m, bounded=True)
        x, _ = solve(problem)
        base = _objective(problem, x)
        assert np.all(x[m:] >= problem.u_min - 1e-12)
        assert np.all(x[m:] <= problem.u_max + 1e-12)
        lower = problem.a_eq[:, :m]
        for _ in range(25):
            u = rng.uniform(problem.u_min, problem.u_max, size=m)
            y = np.linalg.solve(lower, problem.b_eq - problem.a_eq[:, m:] @ u)
            cand = np.concatenate([y, u])
            assert base <= _objective(problem, cand) + 1e-9


def test_initial_guess_only_seeds_the_active_set():
    rng = np.random.default_rng(31)
    problem = _random_problem(rng, 4, bounded=True)
    plain, _ = solve(problem)
    seeded = QpProblem(problem.cost_quad, problem.cost_lin, problem.a_eq,
                       problem.b_eq, u_min=problem.u_min, u_max=problem.u_max,
                       initial_guess=np.full(8, 1e6))
    boxed, _ = solve(seeded)
    assert np.allclose(plain, boxed, atol=1e-9)


# --- degenerate Hessian paths ---------------------------------------------------------

def test_ridge_rescues_singular_reduced_hessian():
    # zero gain and zero effort weight leave no curvature in u at all
    x, diag = solve(_scalar_problem(1.0, 0.0, 0.0, -1.0, 3.0))
    assert diag.ridge_applied
    assert np.all(np.isfinite(x))
    assert x[0] == pytest.approx(-1.0, abs=1e-12)  # output is pinned by the equality


def test_indefinite_hessian_raises_after_ridge():
    with pytest.raises(QpError):
        solve(_scalar_problem(-1.0, 0.0, 1.0, 0.0, 0.0))


def test_infeasible_box_raises():
    with pytest.raises(QpError):
        solve(_scalar_problem(1.0, 0.5, 2.0, 0.0, 1.0, u_min=2.0, u_max=-2.0))


# --- validation ------------------------------------------------------------------------

def test_problem_shape_validation():
    eye2 = np.eye(2)
    with pytest.raises(ValueError):
        QpProblem(eye2, np.zeros(2), np.array([[1.0, 0.0, 0.0]]), np.zeros(1))
    with pytest.raises(ValueError):
        QpProblem(eye2, np.zeros(3), np.array([[1.0, -1.0]]), np.zeros(1))
    with pytest.raises(ValueError):
        QpProblem(eye2, np.zeros(2), np.array([[2.0, -1.0]]), np.zeros(1))
    with pytest.raises(ValueError):
        QpProblem(np.eye(4), np.zeros(4),
                  np.array([[1.0, 1.0, -1.0, 0.0], [0.0, 1.0, 0.0, -1.0]]),
                  np.zeros(2))
    with pytest.raises(ValueError):
        QpProblem(np.ones((2, 2)), np.zeros(2), np.array([[1.0, -1.0]]), np.zeros(1))
    with pytest.raises(ValueError):
        QpProblem(eye2, np.zeros(2), np.array([[1.0, -1.0]]), np.zeros(1), u_min=0.0)
