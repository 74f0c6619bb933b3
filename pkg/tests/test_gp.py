#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Tests for the Matern kernel and the GP surrogate
"""

import numpy as np
import pytest

import config
from src.optim.lbfgs import lbfgs_run
from src.surrogate import kernel as kern
from src.surrogate.gp import (Dataset, GammaPrior, GpModel, fit, nlml, nlml_and_grad,
                              penalised_objective, posterior)
from src.surrogate.kernel import KernelParams
from src.utils.errors import DimensionMismatch
from tests.conftest import make_dataset, make_model


def naive_posterior(model, xq):
    """Posterior by explicit inversion of the regularised Gram matrix"""
    x, y, p = model.dataset.inputs, model.dataset.outputs, model.params
    c_inv = np.linalg.inv(kern.gram(x, x, p) + p.noise_variance * np.eye(x.shape[0]))
    k_qn = kern.gram(xq, x, p)
    return k_qn @ c_inv @ y, kern.gram(xq, xq, p) - k_qn @ c_inv @ k_qn.T


# Kernel

def test_matern_at_zero_distance_is_signal_variance():
    params = KernelParams(np.array([0.3, 0.7]), 2.5, 1e-3)
    assert kern.matern52(np.array([0.1, 0.2]), np.array([0.1, 0.2]), params) == pytest.approx(2.5)


def test_matern_unit_distance():
    params = KernelParams(np.array([1.0]), 1.0, 1e-3)
    expected = np.exp(-np.sqrt(5.0)) * (1.0 + np.sqrt(5.0) + 5.0 / 3.0)
    assert kern.matern52(np.array([0.0]), np.array([1.0]), params) == pytest.approx(expected, rel=1e-12)


def test_matern_scale_invariance():
    a, b = np.array([0.1, 0.4]), np.array([0.3, 0.2])
    p1 = KernelParams(np.array([0.5, 0.8]), 1.3, 1e-3)
    p2 = KernelParams(np.array([1.0, 1.6]), 1.3, 1e-3)
    assert kern.matern52(a, b, p1) == pytest.approx(kern.matern52(2 * a, 2 * b, p2), rel=1e-12)


def test_matern_gradient():
    params = KernelParams(np.array([0.4]), 1.1, 1e-3)
    a, b = np.array([0.37]), np.array([0.81])
    np.testing.assert_allclose(kern.matern52_grad_x1(a, a, params), [0.0])
    h = 1e-6
    fd = (kern.matern52(a + h, b, params) - kern.matern52(a - h, b, params)) / (2 * h)
    assert kern.matern52_grad_x1(a, b, params)[0] == pytest.approx(fd, abs=1e-6)
    np.testing.assert_allclose(kern.matern52_grad_x1(a, b, params), -kern.matern52_grad_x1(b, a, params))


def test_kernel_params_validation_and_log_round_trip():
    with pytest.raises(ValueError):
        KernelParams(np.array([0.5, -1.0]), 1.0, 1e-3)
    params = KernelParams(np.array([0.2, 0.9]), 1.7, 3e-4)
    back = KernelParams.from_log(params.to_log())
    np.testing.assert_allclose(back.lengthscales, params.lengthscales)
    assert back.noise_variance == pytest.approx(params.noise_variance)


# NLML

def test_nlml_single_point():
    data = Dataset.from_raw(np.array([[0.5]]), np.array([3.0]))
    params = KernelParams(np.array([0.5]), 0.999, 0.001)
    assert nlml(data, params) == pytest.approx(0.5 * np.log(2 * np.pi), abs=1e-12)


def test_nlml_two_points_closed_form():
    data = Dataset.from_raw(np.array([[0.1], [0.6]]), np.array([1.0, -2.0]))
    params = KernelParams(np.array([0.4]), 1.3, 0.05)
    k12 = kern.matern52(np.array([0.1]), np.array([0.6]), params)
    c = np.array([[1.35, k12], [k12, 1.35]])
    det = c[0, 0] * c[1, 1] - c[0, 1] ** 2
    inv = np.array([[c[1, 1], -c[0, 1]], [-c[1, 0], c[0, 0]]]) / det
    y = data.outputs
    expected = 0.5 * np.log(det) + 0.5 * y @ inv @ y + np.log(2 * np.pi)
    assert nlml(data, params) == pytest.approx(expected, abs=1e-10)


def test_nlml_gradient_matches_finite_differences():
    data = make_dataset(7, 2, seed=4)
    theta = KernelParams(np.array([0.35, 0.6]), 0.8, 0.01).to_log()
    _, grad = nlml_and_grad(data, theta)
    h = 1e-5
    for k in range(theta.size):
        step = np.zeros_like(theta)
        step[k] = h
        fd = (nlml_and_grad(data, theta + step)[0] - nlml_and_grad(data, theta - step)[0]) / (2 * h)
        assert grad[k] == pytest.approx(fd, rel=1e-5, abs=1e-7)


# Fitting

def test_fit_is_a_fixed_point_of_the_penalised_objective():
    data = make_dataset(12, 2, seed=8)
    objective = penalised_objective(data, GammaPrior())
    first = fit(data, rng=np.random.default_rng(0))
    second = fit(data, init=first.params, rng=np.random.default_rng(1))
    assert objective(second.params.to_log())[0] >= objective(first.params.to_log())[0] - 1e-9


def test_fit_on_constant_outputs_shrinks_noise():
    x = np.random.default_rng(2).random((6, 1))
    data = Dataset.from_raw(x, np.full(6, 4.0))
    model = fit(data, rng=np.random.default_rng(0))
    assert model.params.noise_variance < config.INIT_NOISE


def test_penalised_objective_increases_along_lbfgs():
    data = make_dataset(8, 2, seed=5)
    lower, upper = KernelParams.log_bounds(2)
    result = lbfgs_run(penalised_objective(data, GammaPrior()), KernelParams.default(2).to_log(), 20,
                       lower=lower, upper=upper)
    assert np.all(np.diff(result.values) >= 0)


@pytest.mark.slow
def test_fit_recovers_lengthscales_of_a_sampled_gp():
    rng = np.random.default_rng(21)
    truth = KernelParams(np.array([0.2, 0.5]), 1.0, 1e-4)
    x = rng.random((30, 2))
    cov = kern.gram(x, x, truth) + truth.noise_variance * np.eye(30)
    y = np.linalg.cholesky(cov) @ rng.standard_normal(30)
    model = fit(Dataset.from_raw(x, y), rng=np.random.default_rng(0))
    ratio = model.params.lengthscales / truth.lengthscales
    assert np.all(ratio > 0.5) and np.all(ratio < 2.0)


# Posterior

def test_posterior_on_empty_data_is_the_prior():
    params = KernelParams(np.array([0.3, 0.3]), 1.5, 1e-3)
    model = GpModel.build(Dataset.empty(2), params)
    xq = np.array([[0.1, 0.2], [0.8, 0.4]])
    post = posterior(model, xq)
    np.testing.assert_allclose(post.mean, 0.0)
    np.testing.assert_allclose(post.cov, kern.gram(xq, xq, params))


def test_posterior_interpolates_training_points():
    model = make_model(n=5, d=2, seed=6, noise=1e-8)
    post = posterior(model, model.dataset.inputs[:3])
    np.testing.assert_allclose(post.mean, model.dataset.outputs[:3], atol=1e-3)
    assert np.all(np.diag(post.cov) <= 1e-6)


def test_posterior_matches_naive_inverse():
    model = make_model(n=5, d=2, seed=1)
    xq = np.random.default_rng(3).random((3, 2))
    post = posterior(model, xq)
    mean, cov = naive_posterior(model, xq)
    np.testing.assert_allclose(post.mean, mean, atol=1e-8)
    np.testing.assert_allclose(post.cov, cov, atol=1e-8)
    np.testing.assert_allclose(post.chol @ post.chol.T, post.cov + post.jitter * np.eye(3), atol=1e-10)


def test_single_point_posterior_is_the_marginal_of_a_pair():
    rng = np.random.default_rng(17)
    for seed in range(20):
        model = make_model(n=10, d=3, seed=seed)
        x, other = rng.random((1, 3)), rng.random((1, 3))
        single = posterior(model, x)
        pair = posterior(model, np.vstack([x, other]))
        assert single.jitter == 0.0 and pair.jitter == 0.0
        assert single.mean[0] == pytest.approx(pair.mean[0], abs=1e-10)
        assert (single.chol @ single.chol.T)[0, 0] == pytest.approx((pair.chol @ pair.chol.T)[0, 0], abs=1e-10)


def test_posterior_covariance_is_positive_semidefinite():
    rng = np.random.default_rng(18)
    for seed in range(30):
        q, d = int(rng.integers(2, 7)), int(rng.integers(1, 5))
        model = make_model(n=int(rng.integers(2, 16)), d=d, seed=seed)
        xq = rng.random((q, d))
        xq[-1] = xq[0]
        if seed % 3 == 0:
            xq[1] = model.dataset.inputs[0]
        post = posterior(model, xq)
        assert np.linalg.eigvalsh(post.cov).min() >= -1e-8
        assert np.linalg.eigvalsh(post.chol @ post.chol.T).min() >= -1e-8


def test_posterior_jacobians_match_finite_differences():
    model = make_model(n=8, d=2, seed=2)
    xq = np.array([[0.21, 0.67], [0.55, 0.18], [0.83, 0.44]])
    post = posterior(model, xq, with_grads=True, jitter=0.0)
    h = 1e-6
    flat = xq.ravel()
    for col in range(flat.size):
        step = np.zeros_like(flat)
        step[col] = h
        plus = posterior(model, (flat + step).reshape(3, 2), jitter=0.0)
        minus = posterior(model, (flat - step).reshape(3, 2), jitter=0.0)
        np.testing.assert_allclose(post.dmean[:, col], (plus.mean - minus.mean) / (2 * h), atol=1e-6)
        np.testing.assert_allclose(post.dchol[:, :, col], (plus.chol - minus.chol) / (2 * h), atol=1e-5)


def test_posterior_rejects_wrong_dimension(model):
    with pytest.raises(DimensionMismatch):
        posterior(model, np.zeros((2, 3)))
