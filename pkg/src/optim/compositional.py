#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Compositional acquisition maximisers

Solvers for max_x f(E_w[g_w(x)]) that keep an auxiliary iterate u and a
tracker zeta of the inner expectation:

    x_{t+1}    = x_t + eta_t phi1 / phi2          (projected on the box)
    u_{t+1}    = x_{t+1}  or  (1 - 1/b) x_t + (1/b) x_{t+1}
    zeta_{t+1} = (1 - w_t) zeta_t + w_t g_bar(u_{t+1})

Instantiations: SCGA, ASCGA, CAdam, NASA and Nested-MC. CAdam, NASA and
Nested-MC also run in the memory-efficient form, where zeta is q x K and
every inner estimate uses K fresh draws instead of pool columns.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np

import config
from src.acquisition.functions import (ColumnEstimate, acq_comp, inner_matrix_me,
                                       minibatch_estimate, sample_indices)
from src.acquisition.gradients import CompGradientCtx, ZetaTracker, grad_comp
from src.optim.first_order import adam_moments, cadam_schedule, resolve_params, scheduled_lr
from src.optim.results import run_restarts, selection_scorer
from src.surrogate.gp import posterior
from src.utils.errors import ConfigError, NonFiniteState
from src.utils.helpers import clip_unit

logger = logging.getLogger(__name__)

COMP_ALGOS = tuple(config.COMP_DEFAULTS)
ME_ALGOS = ("cadam", "nasa", "nested_mc")


@dataclass
class CompState:
    """
    State of a compositional solver

    Attributes:
        x (np.ndarray): Flattened batch
        u (np.ndarray): Auxiliary iterate
        zeta (ZetaTracker): Tracker of the inner expectation
        m1 (np.ndarray): First accumulator
        m2 (np.ndarray): Second accumulator
        t (int): Steps taken
        algo (str): Algorithm id
        params (dict): Hyperparameters
        me (bool): Memory-efficient form
        pool (SamplePool): Pool for index sampling, None when me is set
        shape (tuple): (q, d) of the batch
    """

    x: np.ndarray
    u: np.ndarray
    zeta: ZetaTracker
    m1: np.ndarray
    m2: np.ndarray
    t: int = 0
    algo: str = "cadam"
    params: dict = field(default_factory=dict)
    me: bool = False
    pool: object = None
    shape: tuple = None

    def is_finite(self):
        return bool(np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.u))
                    and np.all(np.isfinite(self.m1)) and np.all(np.isfinite(self.m2))
                    and self.zeta.is_finite())


def new_state(x0, zeta, algo, params=None, me=False, pool=None):
    """
    Build a state from a starting point and an initial tracker

    Args:
        x0 (np.ndarray): Starting batch, q x d
        zeta (ZetaTracker): zeta_0
        algo (str): Algorithm id
        params (dict, optional): Hyperparameter overrides
        me (bool): Memory-efficient form
        pool (SamplePool, optional): Pool for index sampling

    Returns:
        CompState: u_0 = x_0, zero accumulators
    """
    if me and algo not in ME_ALGOS:
        raise ConfigError(f"{algo} has no memory-efficient form (available: {', '.join(ME_ALGOS)})")
    full = resolve_params(config.COMP_DEFAULTS, algo, params)
    x0 = np.asarray(x0, dtype=float)
    x = clip_unit(x0.ravel())
    return CompState(x=x, u=x.copy(), zeta=zeta, m1=np.zeros_like(x), m2=np.zeros_like(x),
                     t=0, algo=algo, params=full, me=me, pool=None if me else pool,
                     shape=x0.shape if x0.ndim == 2 else (1, x.size))


def schedule(algo, t, params):
    """
    Step size, zeta weight and extrapolation factor at step t

    Args:
        algo (str): Algorithm id
        t (int): Step number, from 1
        params (dict): Hyperparameters

    Returns:
        dict: eta, zeta_weight, extrapolate (1/b or None) and algorithm extras
    """
    if algo in ("scga", "ascga"):
        beta_t = min(1.0, params["beta"] * t ** -params["beta_decay"])
        return {"eta": params["lr"] * t ** -params["lr_decay"], "zeta_weight": beta_t,
                "extrapolate": 1.0 / beta_t if algo == "ascga" else None}
    if algo == "cadam":
        beta1_t, beta2_t, eta_t = cadam_schedule(t, params)
        return {"eta": eta_t, "zeta_weight": params["beta"], "extrapolate": 1.0 / params["beta"],
                "beta1": beta1_t, "beta2": beta2_t}
    if algo == "nasa":
        tau = 1.0 / t ** params["gamma"]
        return {"eta": tau / params["beta"], "zeta_weight": min(1.0, params["b"] * tau),
                "extrapolate": None, "grad_weight": min(1.0, params["a"] * tau)}
    if algo == "nested_mc":
        return {"eta": scheduled_lr(params, t), "zeta_weight": 1.0, "extrapolate": None}
    raise ConfigError(f"Unknown compositional algorithm: {algo}")


def comp_update(state, grad, refresh):
    """
    Apply one compositional update

    Args:
        state (CompState): State at step t
        grad (np.ndarray): Compositional gradient at (x_t, zeta_t)
        refresh (callable): u -> ColumnEstimate of the inner matrix at u

    Returns:
        CompState: State at step t + 1

    Raises:
        NonFiniteState: If any part of the new state is not finite
    """
    g = np.asarray(grad, dtype=float).ravel()
    if not np.all(np.isfinite(g)):
        raise NonFiniteState(f"{state.algo} gradient is not finite at step {state.t + 1}")
    p = state.params
    t = state.t + 1
    sched = schedule(state.algo, t, p)
    x, m1, m2 = state.x, state.m1, state.m2

    if state.algo in ("scga", "ascga"):
        step = sched["eta"] * g
    elif state.algo == "cadam":
        m1 = sched["beta1"] * m1 + (1.0 - sched["beta1"]) * g
        m2 = sched["beta2"] * m2 + (1.0 - sched["beta2"]) * g ** 2
        step = sched["eta"] * m1 / (np.sqrt(m2) + p["eps"])
    elif state.algo == "nasa":
        m1 = (1.0 - sched["grad_weight"]) * m1 + sched["grad_weight"] * g
        step = sched["eta"] * m1
    else:
        m1, m2 = adam_moments(m1, m2, g, p["beta1"], p["beta2"])
        m_hat = m1 / (1.0 - p["beta1"] ** t)
        v_hat = m2 / (1.0 - p["beta2"] ** t)
        step = sched["eta"] * m_hat / (np.sqrt(v_hat) + p["eps"])

    x_new = clip_unit(x + step)
    if sched["extrapolate"] is None:
        u_new = x_new.copy()
    else:
        inv = sched["extrapolate"]
        u_new = clip_unit((1.0 - inv) * x + inv * x_new)

    zeta = state.zeta.copy()
    zeta.blend(refresh(u_new), sched["zeta_weight"])
    new = replace(state, x=x_new, u=u_new, zeta=zeta, m1=m1, m2=m2, t=t)
    if not new.is_finite():
        raise NonFiniteState(f"{state.algo} state became non-finite at step {t}")
    return new


def inner_estimate(kind, model, xq, spec, k2, rng, pool=None):
    """
    Minibatch estimate g_bar of the inner matrix at a batch

    Args:
        kind (str): Acquisition kind
        model (GpModel): Surrogate
        xq (np.ndarray): q x d batch
        spec (AcquisitionSpec): Constants
        k2 (int): Minibatch size (K draws in the memory-efficient form)
        rng (np.random.Generator): Caller-owned generator
        pool (SamplePool, optional): Pool; None selects the memory-efficient form

    Returns:
        ColumnEstimate: q x M sparse average, or q x K dense matrix of fresh columns
    """
    post = posterior(model, xq)
    if pool is None:
        a = inner_matrix_me(kind, post, k2, rng, spec)
        return ColumnEstimate(np.arange(k2), a, k2)
    return minibatch_estimate(kind, post, pool, sample_indices(rng, pool.m, k2), spec)


def comp_init(x0, kind, model, spec, k2, rng, me=False, pool=None, algo="cadam", params=None):
    """
    Initialise a compositional solver at x0

    Args:
        x0 (np.ndarray): q x d starting batch
        kind (str): Acquisition kind
        model (GpModel): Surrogate
        spec (AcquisitionSpec): Constants
        k2 (int): Minibatch for zeta_0 (K in the memory-efficient form)
        rng (np.random.Generator): Caller-owned generator
        me (bool): Memory-efficient form
        pool (SamplePool, optional): Pool, required unless me is set
        algo (str): Algorithm id
        params (dict, optional): Hyperparameter overrides

    Returns:
        CompState: u_0 = x_0 and zeta_0 = g_bar(x_0)
    """
    if not me and pool is None:
        raise ValueError("the pool-based compositional form needs a sample pool")
    x0 = clip_unit(np.asarray(x0, dtype=float))
    estimate = inner_estimate(kind, model, x0, spec, k2, rng, None if me else pool)
    return new_state(x0, ZetaTracker.from_estimate(estimate), algo, params, me, pool)


def comp_step(state, kind, model, spec, k1, k2, algo, rng):
    """
    One compositional step on an acquisition

    Args:
        state (CompState): State from comp_init or a previous step
        kind (str): Acquisition kind
        model (GpModel): Surrogate
        spec (AcquisitionSpec): Constants
        k1 (int): Gradient minibatch (must equal K in the memory-efficient form)
        k2 (int): Inner-estimate minibatch
        algo (str): Algorithm id, must match the state
        rng (np.random.Generator): Caller-owned generator

    Returns:
        CompState: Updated state
    """
    if algo != state.algo:
        raise ConfigError(f"state was created for {state.algo}, step asked for {algo}")
    q, d = state.shape
    ctx = CompGradientCtx(zeta=state.zeta, u=state.u, pool=state.pool)
    gradient = grad_comp(kind, model, state.x.reshape(q, d), ctx, k1, rng, spec)

    def refresh(u):
        return inner_estimate(kind, model, u.reshape(q, d), spec, k2, rng, state.pool)

    return comp_update(state, gradient.g, refresh)


def comp_step_me(state, kind, model, spec, k, algo, rng):
    """
    One memory-efficient compositional step

    Only K x q fresh draws are alive at any time; zeta is q x K.

    Args:
        state (CompState): State created with me set
        kind (str): Acquisition kind
        model (GpModel): Surrogate
        spec (AcquisitionSpec): Constants
        k (int): Draws per estimate, equal to the zeta width
        algo (str): Algorithm id
        rng (np.random.Generator): Caller-owned generator

    Returns:
        CompState: Updated state
    """
    if not state.me or state.pool is not None:
        raise ConfigError("comp_step_me needs a state created in memory-efficient mode")
    if state.zeta.n_columns != k:
        raise ValueError(f"zeta has {state.zeta.n_columns} columns, k is {k}")
    return comp_step(state, kind, model, spec, k, k, algo, rng)


def run_comp(model, spec, x0_batches, algo, t_steps, k1, k2, rng, me=False, pool=None,
             params=None, selection_samples=config.ERM_SELECTION_SAMPLES):
    """
    Maximise a compositional acquisition from several restarts

    Args:
        model (GpModel): Surrogate
        spec (AcquisitionSpec): Acquisition with form COMP or COMP_ME
        x0_batches (list): Restart q x d batches
        algo (str): Compositional algorithm id
        t_steps (int): Steps per restart
        k1 (int): Gradient minibatch
        k2 (int): Inner-estimate minibatch
        rng (np.random.Generator): Caller-owned generator
        me (bool): Memory-efficient form (k1 is then ignored and K = k2)
        pool (SamplePool, optional): Step pool; in the memory-efficient form it is only
            used to rank the final batches
        params (dict, optional): Hyperparameter overrides
        selection_samples (int): Fresh draws used for ranking when no pool is given

    Returns:
        MaximisationResult: Best final batch by acq_comp on the full pool
    """
    def optimise_one(k, x0):
        state = comp_init(x0, spec.kind, model, spec, k2, rng, me=me, pool=pool, algo=algo, params=params)
        for _ in range(t_steps):
            if me:
                state = comp_step_me(state, spec.kind, model, spec, k2, algo, rng)
            else:
                state = comp_step(state, spec.kind, model, spec, k1, k2, algo, rng)
        return state.x.reshape(state.shape)

    q = np.asarray(x0_batches[0]).shape[0]
    if pool is None:
        score = selection_scorer(model, spec, None, rng, selection_samples, q)
    else:
        def score(xq):
            return acq_comp(spec.kind, posterior(model, xq), pool, spec)
    return run_restarts(x0_batches, optimise_one, score)
