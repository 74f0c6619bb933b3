#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Second-order acquisition maximisers

L-BFGS on a fixed minibatch of the FSM or ERM estimate, and CL-BFGS on
the compositional form. CL-BFGS refreshes zeta to g_bar(x_t) at every
evaluation and draws one set of max(K1, K2) pool columns per run. zeta and
the gradient both use that set, so the gradient is the exact slope of the
value seen by the line search.
"""

import logging

import numpy as np

import config
from src.acquisition.functions import draw_normals, minibatch_estimate, outer_value, sample_indices
from src.acquisition.gradients import (CompGradientCtx, ZetaTracker, comp_grad_from_posterior,
                                       grad_from_posterior)
from src.optim.lbfgs import lbfgs_run
from src.optim.results import run_restarts, selection_scorer
from src.surrogate.gp import posterior
from src.utils.errors import NonFiniteState

logger = logging.getLogger(__name__)

SECOND_ORDER_ALGOS = ("lbfgs", "clbfgs")


def fixed_sample_objective(kind, model, spec, q, d, z):
    """
    Deterministic acquisition estimate over a fixed set of draws

    Args:
        kind (str): Acquisition kind
        model (GpModel): Surrogate
        spec (AcquisitionSpec): Constants
        q (int): Batch size
        d (int): Input dimension
        z (np.ndarray): K x q draws held fixed for the whole run

    Returns:
        callable: dq-vector -> (value, gradient)
    """
    def objective(x):
        gradient = grad_from_posterior(kind, posterior(model, x.reshape(q, d), with_grads=True), z, spec)
        return gradient.value, gradient.g

    return objective


def comp_objective(kind, model, spec, q, d, pool, columns):
    """
    Compositional objective with zeta = g_bar(x) on fixed columns

    The returned gradient J^T grad f(zeta) is taken over the same columns
    as zeta, which makes it the derivative of the returned f(zeta).

    Args:
        kind (str): Acquisition kind
        model (GpModel): Surrogate
        spec (AcquisitionSpec): Constants
        q (int): Batch size
        d (int): Input dimension
        pool (SamplePool): Pool of M draws
        columns (np.ndarray): Distinct pool columns shared by zeta and the gradient

    Returns:
        callable: dq-vector -> (f(zeta), compositional gradient)
    """
    def objective(x):
        xq = x.reshape(q, d)
        post = posterior(model, xq, with_grads=True)
        estimate = minibatch_estimate(kind, post, pool, columns, spec)
        ctx = CompGradientCtx(zeta=ZetaTracker.from_estimate(estimate), u=x, pool=pool)
        gradient = comp_grad_from_posterior(kind, post, ctx, columns.size, None, spec, indices=columns)
        return outer_value(kind, estimate), gradient.g

    return objective


def clbfgs_run(kind, model, spec, x0, t_steps, k1, k2, rng, pool, history=config.LBFGS_HISTORY):
    """
    CL-BFGS from one starting batch

    Args:
        kind (str): Acquisition kind
        model (GpModel): Surrogate
        spec (AcquisitionSpec): Constants
        x0 (np.ndarray): q x d starting batch
        t_steps (int): Maximum accepted steps
        k1 (int): Gradient minibatch
        k2 (int): Inner-estimate minibatch; the run shares max(k1, k2) columns
        rng (np.random.Generator): Caller-owned generator, used once for the columns
        pool (SamplePool): Pool of M draws
        history (int): Curvature pairs kept

    Returns:
        LbfgsResult: Best point visited (flattened) and its value
    """
    x0 = np.asarray(x0, dtype=float)
    q, d = x0.shape
    columns = sample_indices(rng, pool.m, max(k1, k2))
    objective = comp_objective(kind, model, spec, q, d, pool, columns)
    return lbfgs_run(objective, x0.ravel(), t_steps, history=history)


def run_second_order(model, spec, x0_batches, algo, t_steps, minibatch, rng, pool=None, k1=config.K1,
                     k2=config.K2, params=None, selection_samples=config.ERM_SELECTION_SAMPLES):
    """
    Maximise an acquisition with L-BFGS or CL-BFGS from several restarts

    L-BFGS holds one minibatch fixed per restart: a pool slice for FSM,
    one set of fresh draws for ERM.

    Args:
        model (GpModel): Surrogate
        spec (AcquisitionSpec): Acquisition with form FSM, ERM (lbfgs) or COMP (clbfgs)
        x0_batches (list): Restart q x d batches
        algo (str): "lbfgs" or "clbfgs"
        t_steps (int): Maximum accepted steps per restart
        minibatch (int): Fixed minibatch size for L-BFGS
        rng (np.random.Generator): Caller-owned generator
        pool (SamplePool, optional): Pool, required except for ERM
        k1 (int): CL-BFGS gradient minibatch
        k2 (int): CL-BFGS inner-estimate minibatch
        params (dict, optional): {"history": int}
        selection_samples (int): Fresh draws used to rank ERM restarts

    Returns:
        MaximisationResult: Best final batch by the shared selection score
    """
    history = int((params or {}).get("history", config.LBFGS_HISTORY))
    if spec.form != "ERM" and pool is None:
        raise ValueError(f"{spec.form} form needs a sample pool")
    q, d = np.asarray(x0_batches[0]).shape

    def optimise_one(k, x0):
        if algo == "clbfgs":
            result = clbfgs_run(spec.kind, model, spec, x0, t_steps, k1, k2, rng, pool, history)
        else:
            if spec.form == "ERM":
                z = draw_normals(rng, minibatch, q)
            else:
                z = pool.z[sample_indices(rng, pool.m, minibatch)]
            objective = fixed_sample_objective(spec.kind, model, spec, q, d, z)
            result = lbfgs_run(objective, x0.ravel(), t_steps, history=history)
        if result.status == "failed":
            raise NonFiniteState(f"{algo} restart {k} started at a non-finite value")
        return result.x.reshape(q, d)

    score = selection_scorer(model, spec, pool, rng, selection_samples, q)
    return run_restarts(x0_batches, optimise_one, score)
