#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Tests for the first-order maximisers
"""

import numpy as np
import pytest

from src.acquisition.functions import AcquisitionSpec, acq_fsm
from src.optim.first_order import (FIRST_ORDER_ALGOS, FirstOrderState, cadam_schedule, general_step,
                                   resolve_params, run_first_order)
from src.surrogate.gp import posterior
from src.utils.errors import ConfigError, NonFiniteGradient


def toy_gradient(x):
    return np.array([0.3, 0.6]) - x


def test_adam_matches_a_reference_implementation():
    lr, b1, b2, eps = 1e-3, 0.9, 0.999, 1e-8
    state = FirstOrderState.start(np.array([0.5, 0.5]), "adam",
                                  {"lr": lr, "beta1": b1, "beta2": b2, "eps": eps, "gamma": 1.0})
    x, m, v = np.array([0.5, 0.5]), np.zeros(2), np.zeros(2)
    for t in range(1, 101):
        g = toy_gradient(x)
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g ** 2
        x = np.clip(x + lr * (m / (1 - b1 ** t)) / (np.sqrt(v / (1 - b2 ** t)) + eps), 0.0, 1.0)
        state = general_step(state, toy_gradient(state.x))
        np.testing.assert_allclose(state.x, x, rtol=0, atol=1e-12)
    assert state.t == 100


def test_adamw_decays_towards_zero_without_gradient():
    state = FirstOrderState.start(np.array([0.8, 0.4]), "adamw", {"lr": 0.1, "weight_decay": 0.1, "gamma": 1.0})
    for _ in range(10):
        state = general_step(state, np.zeros(2))
    np.testing.assert_allclose(state.x, np.array([0.8, 0.4]) * 0.99 ** 10)


def test_sga_momentum_and_schedule():
    state = FirstOrderState.start(np.array([0.5]), "sga", {"lr": 0.01, "gamma": 0.5})
    state = general_step(state, np.array([1.0]))
    assert state.x[0] == pytest.approx(0.51)
    state = general_step(state, np.array([3.0]))
    # m = 0.5 * 1 + 0.5 * 3, lr = 0.01 * 0.5
    assert state.x[0] == pytest.approx(0.51 + 0.005 * 2.0)


def test_rprop_adapts_step_sizes():
    state = FirstOrderState.start(np.array([0.5]), "rprop", {"lr": 0.01, "gamma": 1.0})
    state = general_step(state, np.array([2.0]))
    state = general_step(state, np.array([5.0]))
    assert state.x[0] == pytest.approx(0.53)
    state = general_step(state, np.array([-1.0]))
    assert state.x[0] == pytest.approx(0.52)


def test_adagrad_normalises_by_accumulated_squares():
    state = FirstOrderState.start(np.array([0.5]), "adagrad", {"lr": 0.1, "lr_decay": 0.0, "eps": 0.0})
    state = general_step(state, np.array([4.0]))
    assert state.x[0] == pytest.approx(0.6)
    state = general_step(state, np.array([3.0]))
    assert state.x[0] == pytest.approx(0.6 + 0.1 * 3.0 / 5.0)


def test_adagrad_steps_shrink_under_a_constant_gradient():
    state = FirstOrderState.start(np.array([0.2]), "adagrad", {"lr": 0.01, "lr_decay": 0.0, "eps": 0.0})
    steps = []
    for _ in range(30):
        new = general_step(state, np.array([0.5]))
        steps.append(abs(new.x[0] - state.x[0]))
        state = new
    assert all(b <= a for a, b in zip(steps, steps[1:]))
    assert steps[-1] == pytest.approx(0.01 / np.sqrt(30))


RMSPROP_PLAIN = {"lr": 0.01, "momentum": 0.0, "alpha": 0.9, "centered": False, "eps": 0.0, "gamma": 1.0}


def test_rmsprop_alpha_weights_the_old_average():
    state = FirstOrderState.start(np.array([0.5]), "rmsprop", RMSPROP_PLAIN)
    state = general_step(state, np.array([2.0]))
    assert state.m2[0] == pytest.approx(0.1 * 4.0)
    assert state.x[0] == pytest.approx(0.5 + 0.01 * 2.0 / np.sqrt(0.4))
    state = general_step(state, np.array([1.0]))
    assert state.m2[0] == pytest.approx(0.9 * 0.4 + 0.1 * 1.0)


@pytest.mark.parametrize("algo, params", [
    ("adam", {"lr": 0.01, "beta1": 0.9, "beta2": 0.999, "eps": 0.0, "gamma": 1.0}),
    ("rmsprop", RMSPROP_PLAIN),
])
def test_first_step_is_invariant_to_gradient_scale(algo, params):
    g = np.array([0.3, -0.7])
    start = FirstOrderState.start(np.array([0.5, 0.5]), algo, params)
    base = general_step(start, g).x
    for c in (0.01, 100.0):
        np.testing.assert_allclose(general_step(start, c * g).x, base, rtol=0, atol=1e-12)


def test_cadam_schedule_values():
    params = {"lr": 0.01, "beta1": 0.9, "mu": 0.99, "c_gamma": 0.75, "alpha_d": 0.26, "mu_d": 1.0, "gamma2_d": 0.5}
    beta1_t, beta2_t, eta_t = cadam_schedule(4, params)
    assert beta1_t == pytest.approx(0.9 * 0.99 ** 4)
    assert beta2_t == pytest.approx(1 - 0.75 * (1 - beta1_t) ** 2 / 2.0)
    assert eta_t == pytest.approx(0.01 * np.sqrt(1 - beta2_t) / ((1 - beta1_t) * 4 ** 0.26))


@pytest.mark.parametrize("algo", FIRST_ORDER_ALGOS)
def test_every_algorithm_ascends_and_stays_in_the_box(algo):
    state = FirstOrderState.start(np.array([0.9, 0.1]), algo)
    for _ in range(20):
        state = general_step(state, toy_gradient(state.x))
    assert np.all((state.x >= 0) & (state.x <= 1))
    assert np.linalg.norm(state.x - np.array([0.3, 0.6])) < np.linalg.norm(np.array([0.6, -0.5]))


def test_non_finite_gradient_raises():
    state = FirstOrderState.start(np.array([0.5, 0.5]), "adam")
    with pytest.raises(NonFiniteGradient):
        general_step(state, np.array([np.nan, 0.0]))
    with pytest.raises(ValueError):
        general_step(state, np.zeros(3))


def test_resolve_params_rejects_unknown_names():
    assert resolve_params({"adam": {"lr": 1.0}}, "adam", {"lr": 2.0}) == {"lr": 2.0}
    with pytest.raises(ConfigError):
        resolve_params({"adam": {"lr": 1.0}}, "adam", {"momentum": 0.5})
    with pytest.raises(ConfigError):
        FirstOrderState.start(np.zeros(2), "newton")


def test_run_first_order_returns_the_best_restart(model, pool):
    spec = AcquisitionSpec("SR", "FSM")
    rng = np.random.default_rng(0)
    x0 = [rng.random((3, 2)) for _ in range(3)]
    result = run_first_order(model, spec, x0, "adam", 5, 8, rng, pool, {"lr": 0.01})
    assert result.x.shape == (3, 2)
    assert np.all((result.x >= 0) & (result.x <= 1))
    assert result.value == pytest.approx(acq_fsm("SR", posterior(model, result.x), pool, spec))
    assert result.value == max(result.restart_values)
    assert len(result.restart_values) == 3 and result.dropped == 0


def test_run_first_order_erm_and_missing_pool(model):
    spec = AcquisitionSpec("EI", "ERM", incumbent=0.0)
    rng = np.random.default_rng(1)
    result = run_first_order(model, spec, [rng.random((2, 2))], "rmsprop", 3, 4, rng, selection_samples=64)
    assert np.isfinite(result.value)
    with pytest.raises(ValueError):
        run_first_order(model, AcquisitionSpec("EI", "FSM"), [rng.random((2, 2))], "adam", 3, 4, rng)
