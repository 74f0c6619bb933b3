#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Tests for the acquisition gradients and the zeta tracker
"""

from dataclasses import replace

import numpy as np
import pytest

from src.acquisition.functions import (AcquisitionSpec, ColumnEstimate, SamplePool, acq_fsm, inner_values,
                                       minibatch_estimate)
from src.acquisition.gradients import (CompGradientCtx, ZetaTracker, comp_grad_from_posterior, grad_comp,
                                       grad_erm, grad_from_posterior, grad_fsm)
from src.surrogate.gp import BatchPosterior, Dataset, GpModel, posterior
from src.surrogate.kernel import KernelParams
from src.utils.errors import DimensionMismatch
from tests.conftest import make_model

KINDS = ("EI", "PI", "SR", "UCB")

XQ = np.array([[0.21, 0.67], [0.55, 0.18], [0.83, 0.44]])


def fsm_value(kind, model, flat, pool, spec):
    return acq_fsm(kind, posterior(model, flat.reshape(XQ.shape)), pool, spec)


@pytest.mark.parametrize("kind", KINDS)
def test_fsm_gradient_matches_finite_differences(kind, model, pool):
    spec = AcquisitionSpec(kind, incumbent=-0.2)
    g = grad_fsm(kind, model, XQ, pool.z, spec).g
    flat = XQ.ravel()
    h = 1e-6
    for col in range(flat.size):
        step = np.zeros_like(flat)
        step[col] = h
        fd = (fsm_value(kind, model, flat + step, pool, spec)
              - fsm_value(kind, model, flat - step, pool, spec)) / (2 * h)
        assert g[col] == pytest.approx(fd, rel=1e-4, abs=1e-5)


def kink_margin(kind, post, z, spec):
    """Distance of the draws from the points where the estimate is not smooth"""
    lz = z @ post.chol.T
    y = post.mean + lz
    v = y if kind == "EI" else inner_values(kind, post, z, spec)
    margin = np.inf
    if post.q > 1:
        top = np.sort(v, axis=1)
        margin = np.min(top[:, -1] - top[:, -2])
    if kind == "EI":
        margin = min(margin, np.min(np.abs(y - spec.incumbent)))
    if kind == "UCB":
        margin = min(margin, np.min(np.abs(lz)))
    return margin


@pytest.mark.parametrize("kind", KINDS)
def test_fsm_gradient_matches_finite_differences_at_random_batches(kind):
    rng = np.random.default_rng(40 + KINDS.index(kind))
    h = 1e-6
    accepted = 0
    for seed in range(400):
        q, d, n = int(rng.integers(1, 5)), int(rng.integers(1, 9)), int(rng.integers(2, 21))
        model = make_model(n, d, seed, noise=1e-3)
        pool = SamplePool.draw(32, q, seed=seed)
        xq = rng.random((q, d))
        post = posterior(model, xq)
        spec = AcquisitionSpec(kind, incumbent=float(post.mean.max() - rng.random()))
        if post.jitter > 0 or kink_margin(kind, post, pool.z, spec) < 1e-4:
            continue
        g = grad_fsm(kind, model, xq, pool.z, spec).g
        flat = xq.ravel()
        for col in range(flat.size):
            step = np.zeros_like(flat)
            step[col] = h
            up = acq_fsm(kind, posterior(model, (flat + step).reshape(q, d)), pool, spec)
            down = acq_fsm(kind, posterior(model, (flat - step).reshape(q, d)), pool, spec)
            assert g[col] == pytest.approx((up - down) / (2 * h), rel=1e-4, abs=1e-5)
        accepted += 1
        if accepted == 40:
            break
    assert accepted == 40


def test_gradient_value_is_the_fsm_estimate(model, pool):
    spec = AcquisitionSpec("EI", incumbent=0.1)
    assert grad_fsm("EI", model, XQ, pool.z, spec).value == pytest.approx(
        acq_fsm("EI", posterior(model, XQ), pool, spec))


def test_flat_prior_gives_zero_single_point_gradient():
    params = KernelParams(np.array([0.4, 0.4]), 1.0, 1e-3)
    model = GpModel.build(Dataset.empty(2), params)
    pool = SamplePool.draw(32, 1, seed=0)
    g = grad_fsm("SR", model, np.array([[0.3, 0.6]]), pool.z, AcquisitionSpec("SR")).g
    assert np.linalg.norm(g) <= 1e-6


def test_ei_gradient_vanishes_below_the_incumbent(model, pool):
    spec = AcquisitionSpec("EI", incumbent=1e6)
    g = grad_fsm("EI", model, XQ, pool.z, spec).g
    np.testing.assert_array_equal(g, 0.0)


def test_pi_gradient_vanishes_when_saturated(model, pool):
    spec = AcquisitionSpec("PI", incumbent=-1e4)
    np.testing.assert_allclose(grad_fsm("PI", model, XQ, pool.z, spec).g, 0.0, atol=1e-12)


def test_detached_posterior_has_zero_gradient(pool):
    post = BatchPosterior.fixed(np.array([0.3, -0.1, 0.2]), 0.5 * np.eye(3), dim=2)
    for kind in KINDS:
        spec = AcquisitionSpec(kind)
        np.testing.assert_array_equal(grad_from_posterior(kind, post, pool.z, spec).g, 0.0)
        ctx = CompGradientCtx(ZetaTracker.from_estimate(
            minibatch_estimate(kind, post, pool, np.arange(pool.m), spec)), np.zeros(6), pool)
        g = comp_grad_from_posterior(kind, post, ctx, 8, np.random.default_rng(0), spec).g
        np.testing.assert_array_equal(g, 0.0)


def test_gradient_rejects_wrong_draw_width(model):
    with pytest.raises(DimensionMismatch):
        grad_fsm("SR", model, XQ, np.zeros((4, 2)), AcquisitionSpec("SR"))


@pytest.mark.parametrize("kind", KINDS)
def test_compositional_gradient_at_exact_zeta_equals_fsm(kind, model, pool):
    spec = AcquisitionSpec(kind, incumbent=-0.2)
    post = posterior(model, XQ, with_grads=True)
    exact = ZetaTracker.from_estimate(minibatch_estimate(kind, post, pool, np.arange(pool.m), spec))
    ctx = CompGradientCtx(exact, XQ.ravel(), pool)
    comp = grad_comp(kind, model, XQ, ctx, pool.m, np.random.default_rng(0), spec)
    fsm = grad_fsm(kind, model, XQ, pool.z, spec)
    np.testing.assert_allclose(comp.g, fsm.g, atol=1e-10)
    assert comp.value == pytest.approx(fsm.value, abs=1e-10)


def test_compositional_gradient_with_fixed_columns(model, pool):
    spec = AcquisitionSpec("SR")
    post = posterior(model, XQ, with_grads=True)
    ctx = CompGradientCtx(ZetaTracker.from_estimate(
        minibatch_estimate("SR", post, pool, np.arange(pool.m), spec)), XQ.ravel(), pool)
    columns = np.array([3, 17, 40])
    comp = comp_grad_from_posterior("SR", post, ctx, columns.size, None, spec, indices=columns)
    np.testing.assert_allclose(comp.g, grad_from_posterior("SR", post, pool.z[columns], spec).g, atol=1e-12)


def test_memory_efficient_gradient_checks_width(model):
    post = posterior(model, XQ, with_grads=True)
    ctx = CompGradientCtx(ZetaTracker(3, 8), XQ.ravel(), None)
    assert ctx.me
    with pytest.raises(DimensionMismatch):
        comp_grad_from_posterior("SR", post, ctx, 4, np.random.default_rng(0), AcquisitionSpec("SR"))
    g = comp_grad_from_posterior("SR", post, ctx, 8, np.random.default_rng(0), AcquisitionSpec("SR"))
    assert g.g.shape == (6,)


def test_erm_gradient_uses_the_generator_draws(model):
    spec = AcquisitionSpec("UCB")
    first = grad_erm("UCB", model, XQ, 16, np.random.default_rng(3), spec)
    second = grad_erm("UCB", model, XQ, 16, np.random.default_rng(3), spec)
    np.testing.assert_array_equal(first.g, second.g)
    z = np.random.default_rng(3).standard_normal((16, 3))
    np.testing.assert_allclose(first.g, grad_fsm("UCB", model, XQ, z, spec).g, atol=1e-12)
    with pytest.raises(ValueError):
        grad_erm("UCB", model, XQ, 0, np.random.default_rng(3), spec)


@pytest.mark.parametrize("kind", ["SR", "EI"])
def test_erm_gradient_is_unbiased(kind, model):
    spec = AcquisitionSpec(kind, incumbent=-0.2)
    rng = np.random.default_rng(11)
    draws = np.array([grad_erm(kind, model, XQ, 16, rng, spec).g for _ in range(500)])
    reference = grad_fsm(kind, model, XQ, SamplePool.draw(100000, 3, seed=12).z, spec).g
    s = draws.std(axis=0)
    tolerance = 4 * np.sqrt(s ** 2 / 500 + s ** 2 * 16 / 100000) + 1e-12
    assert np.all(np.abs(draws.mean(axis=0) - reference) <= tolerance)


@pytest.mark.parametrize("shift", [-1.5, 0.3, 4.0])
def test_ei_gradient_is_unchanged_by_a_common_shift(shift, model, pool):
    post = posterior(model, XQ, with_grads=True)
    spec = AcquisitionSpec("EI", incumbent=0.1)
    base = grad_from_posterior("EI", post, pool.z, spec)
    moved = grad_from_posterior("EI", replace(post, mean=post.mean + shift), pool.z,
                                spec.with_incumbent(0.1 + shift))
    np.testing.assert_allclose(moved.g, base.g, atol=1e-10)
    assert moved.value == pytest.approx(base.value, abs=1e-10)


# Zeta tracker

def test_tracker_blend_is_an_exponential_average():
    a = np.arange(6.0).reshape(2, 3)
    tracker = ZetaTracker.from_matrix(a)
    tracker.blend(ColumnEstimate(np.array([1]), np.array([[10.0], [20.0]]), 3), 0.25)
    expected = 0.75 * a
    expected[:, 1] += 0.25 * np.array([10.0, 20.0])
    np.testing.assert_allclose(tracker.dense(), expected)
    np.testing.assert_allclose(tracker.values([0, 2]), expected[:, [0, 2]])


def test_tracker_full_weight_replaces():
    tracker = ZetaTracker.from_matrix(np.ones((2, 3)))
    tracker.blend(ColumnEstimate(np.array([2]), np.array([[5.0], [6.0]]), 3), 1.0)
    np.testing.assert_array_equal(tracker.dense(), [[0.0, 0.0, 5.0], [0.0, 0.0, 6.0]])


def test_tracker_renormalises_long_runs():
    tracker = ZetaTracker.from_matrix(np.ones((1, 2)))
    one = ColumnEstimate(np.array([0]), np.array([[1.0]]), 2)
    for _ in range(1200):
        tracker.blend(one, 0.5)
    assert tracker.is_finite()
    assert tracker.dense()[0, 0] == pytest.approx(1.0)
    assert tracker.dense()[0, 1] == pytest.approx(0.0, abs=1e-300)


def test_tracker_copy_is_independent():
    tracker = ZetaTracker.from_matrix(np.ones((1, 2)))
    other = tracker.copy()
    other.blend(ColumnEstimate(np.array([0]), np.array([[3.0]]), 2), 1.0)
    np.testing.assert_array_equal(tracker.dense(), [[1.0, 1.0]])


def test_tracker_rejects_other_shapes():
    tracker = ZetaTracker(2, 3)
    with pytest.raises(DimensionMismatch):
        tracker.blend(ColumnEstimate(np.array([0]), np.zeros((2, 1)), 4), 0.5)
