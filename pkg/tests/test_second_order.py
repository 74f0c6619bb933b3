#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Tests for L-BFGS, CL-BFGS and the second-order maximisers
"""

import numpy as np
import pytest

from src.acquisition.functions import AcquisitionSpec, acq_fsm
from src.optim.lbfgs import LbfgsState, backtrack, lbfgs_direction, lbfgs_run, update_pairs
from src.optim.second_order import clbfgs_run, comp_objective, fixed_sample_objective, run_second_order
from src.surrogate.gp import posterior
from src.utils.errors import LineSearchFailed

Q = np.array([[3.0, 1.0], [1.0, 2.0]])
CENTRE = np.array([0.3, 0.7])


def concave_quadratic(x):
    diff = x - CENTRE
    return -0.5 * diff @ Q @ diff, -Q @ diff


def test_direction_without_pairs_is_the_gradient():
    g = np.array([0.4, -1.2])
    np.testing.assert_array_equal(lbfgs_direction(LbfgsState.start(np.zeros(2)), g), g)


def test_two_conjugate_pairs_recover_the_inverse_hessian():
    hessian = np.diag([2.0, 1.0])
    state = LbfgsState.start(np.zeros(2))
    for s in (np.array([1.0, 0.0]), np.array([0.0, 1.0])):
        assert update_pairs(state, s, hessian @ s)
    g = np.array([0.7, -0.3])
    np.testing.assert_allclose(lbfgs_direction(state, g), np.linalg.solve(hessian, g), atol=1e-12)


def test_pairs_without_curvature_are_rejected():
    state = LbfgsState.start(np.zeros(2))
    assert not update_pairs(state, np.array([1.0, 0.0]), np.array([-1.0, 0.0]))
    assert not update_pairs(state, np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    assert len(state.pairs) == 0


def test_history_is_bounded():
    state = LbfgsState.start(np.zeros(2), history=3)
    for k in range(5):
        update_pairs(state, np.array([1.0, k]), np.array([1.0, k]))
    assert len(state.pairs) == 3
    np.testing.assert_array_equal(state.pairs[-1].s, [1.0, 4.0])


def test_lbfgs_maximises_a_concave_quadratic():
    result = lbfgs_run(concave_quadratic, np.array([1.0, 0.0]), 50)
    np.testing.assert_allclose(result.x, CENTRE, atol=1e-6)
    assert np.all(np.diff(result.values) >= 0)
    assert result.value == max(result.values)


def test_lbfgs_stops_at_a_zero_gradient():
    result = lbfgs_run(lambda x: (1.0, np.zeros_like(x)), np.array([0.5, 0.5]), 10)
    assert result.status == "converged"
    assert result.values == [1.0]


def test_lbfgs_respects_the_box():
    def outside(x):
        diff = x - np.array([1.5, -0.5])
        return -0.5 * diff @ diff, -diff

    result = lbfgs_run(outside, np.array([0.5, 0.5]), 30)
    np.testing.assert_allclose(result.x, [1.0, 0.0], atol=1e-8)


def test_lbfgs_reports_a_non_finite_start():
    result = lbfgs_run(lambda x: (-np.inf, np.zeros_like(x)), np.array([0.5]), 10)
    assert result.status == "failed"


def test_backtrack_fails_on_a_wrong_direction():
    with pytest.raises(LineSearchFailed):
        backtrack(concave_quadratic, CENTRE + 0.1, concave_quadratic(CENTRE + 0.1)[0],
                  concave_quadratic(CENTRE + 0.1)[1], np.array([0.1, 0.1]), 0.0, 1.0)


def test_lbfgs_on_a_compositional_toy():
    a = np.array([[1.0, 0.2], [0.1, 0.8]])
    target = np.array([0.3, 0.6])

    def objective(x):
        # f(g(x)) with g(x) = A x and f(y) = -0.5 |y - A x*|^2
        residual = a @ x - a @ target
        return -0.5 * residual @ residual, -a.T @ residual

    result = lbfgs_run(objective, np.array([0.9, 0.1]), 50)
    np.testing.assert_allclose(result.x, target, atol=1e-6)


def test_clbfgs_on_the_whole_pool_matches_lbfgs_on_fsm(model, pool):
    spec = AcquisitionSpec("EI", "COMP", incumbent=-0.5)
    x0 = np.array([[0.2, 0.3], [0.6, 0.7], [0.8, 0.1]])
    comp = clbfgs_run("EI", model, spec, x0, 5, pool.m, pool.m, np.random.default_rng(0), pool)
    plain = lbfgs_run(fixed_sample_objective("EI", model, spec, 3, 2, pool.z), x0.ravel(), 5)
    np.testing.assert_allclose(comp.x, plain.x, atol=1e-6)
    assert comp.value == pytest.approx(plain.value, abs=1e-8)


@pytest.mark.parametrize("kind", ["SR", "PI", "UCB"])
def test_compositional_objective_gradient_is_the_slope_of_its_value(kind, model, pool):
    spec = AcquisitionSpec(kind, "COMP", incumbent=-0.2)
    columns = np.random.default_rng(6).choice(pool.m, size=20, replace=False)
    objective = comp_objective(kind, model, spec, 3, 2, pool, columns)
    flat = np.array([0.21, 0.67, 0.55, 0.18, 0.83, 0.44])
    _, g = objective(flat)
    h = 1e-6
    for col in range(flat.size):
        step = np.zeros_like(flat)
        step[col] = h
        fd = (objective(flat + step)[0] - objective(flat - step)[0]) / (2 * h)
        assert g[col] == pytest.approx(fd, rel=1e-4, abs=1e-6)


@pytest.mark.parametrize("algo,form", [("lbfgs", "FSM"), ("lbfgs", "ERM"), ("clbfgs", "COMP")])
def test_run_second_order(algo, form, model, pool):
    spec = AcquisitionSpec("SR", form)
    rng = np.random.default_rng(3)
    x0 = [rng.random((3, 2)) for _ in range(2)]
    result = run_second_order(model, spec, x0, algo, 5, 16, rng, None if form == "ERM" else pool,
                              k1=16, k2=16, params={"history": 4}, selection_samples=128)
    assert np.all((result.x >= 0) & (result.x <= 1))
    if form != "ERM":
        assert result.value == pytest.approx(acq_fsm("SR", posterior(model, result.x), pool, spec))


def test_run_second_order_needs_a_pool_for_fsm(model):
    with pytest.raises(ValueError):
        run_second_order(model, AcquisitionSpec("SR", "FSM"), [np.zeros((3, 2))], "lbfgs", 5, 16,
                         np.random.default_rng(0))
