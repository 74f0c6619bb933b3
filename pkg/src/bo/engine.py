#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Batched Bayesian-optimisation loop

Each step refits the GP, draws a fresh sample pool, picks promising
restart batches, maximises the configured acquisition form with the
configured optimiser and queries the black box at the q new points.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np

import config
from src.acquisition.functions import AcquisitionSpec, SamplePool, acq_fsm, draw_normals, inner_values, max_average
from src.bo.tasks import SyntheticTask, normalised_regret
from src.optim.compositional import run_comp
from src.optim.first_order import run_first_order
from src.optim.results import RESTART_FAILURES, MaximisationResult, selection_scorer
from src.optim.second_order import run_second_order
from src.optim.zero_order import run_zero_order
from src.surrogate.gp import Dataset, fit, posterior
from src.utils.constants import FAMILY_COMP, FAMILY_FIRST, FAMILY_SECOND, FAMILY_ZERO, OPTIMISERS
from src.utils.errors import ConfigError
from src.utils.helpers import debug_log, derive_seed, make_rng, stopwatch

logger = logging.getLogger(__name__)

RESTART_STRATEGIES = ("boltzmann", "topk")


def _guarded_score(score, xq, label):
    """score(xq), or -inf when the batch hits a numerical failure"""
    try:
        return float(score(xq))
    except RESTART_FAILURES as exc:
        logger.debug("%s scored -inf: %s", label, exc)
        return -np.inf


@dataclass(frozen=True)
class OptimiserConfig:
    """
    Acquisition maximiser and the form it works on

    Attributes:
        algo (str): Optimiser id from the registry
        form (str): "ERM", "FSM", "COMP" or "COMP_ME"
        params (dict): Hyperparameter overrides
    """

    algo: str
    form: str = "FSM"
    params: dict = field(default_factory=dict, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "form", self.form.upper())
        if self.algo not in OPTIMISERS:
            raise ConfigError(f"Unknown optimiser: {self.algo} (available: {', '.join(OPTIMISERS)})")
        forms = OPTIMISERS[self.algo][2]
        if self.form not in forms:
            raise ConfigError(f"{self.algo} does not support form {self.form} (supported: {', '.join(forms)})")

    @property
    def family(self):
        return OPTIMISERS[self.algo][1]

    @property
    def display_name(self):
        return OPTIMISERS[self.algo][0]


@dataclass(frozen=True)
class BoConfig:
    """
    Settings of one BO run

    Attributes:
        acq (AcquisitionSpec): Acquisition template; its form is taken from optimiser
        optimiser (OptimiserConfig): Maximiser
        q (int): Batch size
        n_steps (int): Acquisition steps N
        t_opt (int): Inner optimiser steps T
        minibatch (int): Draws per gradient m
        n_raw (int): Raw restart batches
        n_restarts (int): Selected restart batches
        n_init (int): Initial uniform design size
        seed (int): Run seed
        pool_size (int): Pool size M
        k1 (int): Compositional gradient minibatch
        k2 (int): Compositional inner minibatch (K in the memory-efficient form)
        restart_strategy (str): "boltzmann" or "topk"
        fit_steps (int): L-BFGS steps per GP fit restart
        fit_restarts (int): GP fit restarts
    """

    acq: AcquisitionSpec
    optimiser: OptimiserConfig
    q: int = config.BATCH_SIZE
    n_steps: int = config.N_STEPS
    t_opt: int = config.T_OPT
    minibatch: int = config.MINIBATCH
    n_raw: int = config.N_RAW
    n_restarts: int = config.N_RESTARTS
    n_init: int = config.N_INIT
    seed: int = 0
    pool_size: int = config.POOL_SIZE
    k1: int = config.K1
    k2: int = config.K2
    restart_strategy: str = config.RESTART_STRATEGY
    fit_steps: int = config.GP_FIT_STEPS
    fit_restarts: int = config.GP_FIT_RESTARTS

    def __post_init__(self):
        if self.acq.form != self.optimiser.form:
            object.__setattr__(self, "acq", replace(self.acq, form=self.optimiser.form))
        if self.q < 1:
            raise ConfigError(f"q must be at least 1, got {self.q}")
        if not self.n_raw >= self.n_restarts >= 1:
            raise ConfigError(f"need n_raw >= n_restarts >= 1, got {self.n_raw} and {self.n_restarts}")
        if self.n_init < 1 or self.n_steps < 0 or self.t_opt < 0:
            raise ConfigError(f"invalid protocol: n_init={self.n_init}, n_steps={self.n_steps}, t_opt={self.t_opt}")
        if self.minibatch < 1 or self.pool_size < 1 or self.k1 < 1 or self.k2 < 1:
            raise ConfigError("minibatch, pool_size, k1 and k2 must be positive")
        if self.restart_strategy not in RESTART_STRATEGIES:
            raise ConfigError(f"Unknown restart strategy: {self.restart_strategy}")

    @property
    def memory_efficient(self):
        return self.optimiser.form == "COMP_ME"

    @property
    def uses_pool(self):
        return self.optimiser.form in ("FSM", "COMP")


@dataclass(frozen=True, eq=False)
class BoState:
    """
    Data gathered so far

    Attributes:
        inputs (np.ndarray): n x d unit-box inputs
        outputs (np.ndarray): Raw black-box values
        params (KernelParams): Hyperparameters of the last fit, None before the first
        step (int): Completed acquisition steps
    """

    inputs: np.ndarray
    outputs: np.ndarray
    params: object = None
    step: int = 0

    @property
    def incumbent(self):
        return float(np.max(self.outputs))


@dataclass
class TraceRow:
    """
    Record of one BO step; step 0 is the initial design

    Attributes:
        step (int): Step index
        batch (np.ndarray): Points queried at this step (unit box)
        values (np.ndarray): Raw black-box values at batch
        incumbent (float): Best raw value observed so far
        regret (float): Normalised regret, None without a known optimum
        fit_ms (float): GP fit wall time
        opt_ms (float): Acquisition maximisation wall time
        acq_value (float): Selection score of the chosen batch
        dropped (int): Restarts dropped after numerical failures
    """

    step: int
    batch: np.ndarray
    values: np.ndarray
    incumbent: float
    regret: float = None
    fit_ms: float = 0.0
    opt_ms: float = 0.0
    acq_value: float = float("nan")
    dropped: int = 0


@dataclass
class BoTrace:
    """Rows of a run, initial design first"""

    rows: list = field(default_factory=list)

    @property
    def incumbents(self):
        return [row.incumbent for row in self.rows]

    @property
    def regrets(self):
        return [row.regret for row in self.rows]

    def __len__(self):
        return len(self.rows)


@dataclass(frozen=True, eq=False)
class RestartSet:
    """
    Restart batches chosen for one maximisation

    Attributes:
        batches (list): q x d batches; the best raw batch comes first when forced
        values (np.ndarray): Screening value of every returned batch
    """

    batches: list
    values: np.ndarray

    @property
    def best(self):
        return self.batches[int(np.argmax(self.values))]


def select_restarts(model, spec, n_raw, n_restarts, rng, q, pool=None,
                    strategy=config.RESTART_STRATEGY, samples=config.ERM_SELECTION_SAMPLES):
    """
    Screen uniform random batches and keep the promising ones

    Boltzmann sampling on standardised screening values without
    replacement, with the argmax always included. When all values are
    equal the draw is uniform. "topk" keeps the n_restarts best.

    Args:
        model (GpModel): Surrogate
        spec (AcquisitionSpec): Acquisition
        n_raw (int): Number of raw batches
        n_restarts (int): Number kept
        rng (np.random.Generator): Caller-owned generator
        q (int): Batch size
        pool (SamplePool, optional): Screen with acq_fsm on this pool; otherwise with
            `samples` fresh draws shared by all batches
        strategy (str): "boltzmann" or "topk"
        samples (int): Fresh draws used without a pool

    Returns:
        RestartSet: Selected batches and their screening values
    """
    if not n_raw >= n_restarts >= 1:
        raise ValueError(f"need n_raw >= n_restarts >= 1, got {n_raw} and {n_restarts}")
    raw = rng.random((n_raw, q, model.dim))
    z = draw_normals(rng, samples, q) if pool is None else None

    def screen(xq):
        post = posterior(model, xq)
        if pool is not None:
            return acq_fsm(spec.kind, post, pool, spec)
        return max_average(spec.kind, inner_values(spec.kind, post, z, spec))

    values = np.array([_guarded_score(screen, xq, f"raw batch {k}") for k, xq in enumerate(raw)])
    values = np.where(np.isfinite(values), values, -np.inf)

    if strategy == "topk":
        chosen = np.argsort(-values, kind="stable")[:n_restarts]
    elif n_restarts == n_raw:
        best = int(np.argmax(values))
        chosen = np.concatenate([[best], np.delete(np.arange(n_raw), best)])
    else:
        finite = np.isfinite(values)
        std = float(np.std(values[finite])) if finite.any() else 0.0
        if std == 0.0 or not np.isfinite(std):
            chosen = rng.choice(n_raw, size=n_restarts, replace=False)
        else:
            best = int(np.argmax(values))
            standardised = (values - np.mean(values[finite])) / std
            weights = np.exp(np.where(finite, standardised - standardised[best], -np.inf))
            others = np.delete(np.arange(n_raw), best)
            probs = weights[others]
            if np.count_nonzero(probs) < n_restarts - 1:
                probs = probs + 1e-300
            picked = rng.choice(others, size=n_restarts - 1, replace=False, p=probs / probs.sum())
            chosen = np.concatenate([[best], picked])
    debug_log(f"restarts {chosen.tolist()} of {n_raw}, best screening value {np.max(values):.6g}")
    return RestartSet([raw[k] for k in chosen], values[chosen])


def maximise_acquisition(model, spec, cfg, restarts, rng, pool=None):
    """
    Run the configured optimiser and keep the better of its result and the best restart

    Args:
        model (GpModel): Surrogate
        spec (AcquisitionSpec): Acquisition with the incumbent set
        cfg (BoConfig): Run settings
        restarts (RestartSet): Starting batches
        rng (np.random.Generator): Caller-owned generator
        pool (SamplePool, optional): Pool of the step

    Returns:
        MaximisationResult: Chosen batch and its selection score
    """
    opt = cfg.optimiser
    batches = restarts.batches
    samples = cfg.k2 if cfg.memory_efficient else config.ERM_SELECTION_SAMPLES
    if opt.family == FAMILY_ZERO:
        result = run_zero_order(model, spec, batches, opt.algo, cfg.t_opt, cfg.minibatch, rng, pool,
                                opt.params, samples)
    elif opt.family == FAMILY_FIRST:
        result = run_first_order(model, spec, batches, opt.algo, cfg.t_opt, cfg.minibatch, rng, pool,
                                 opt.params, samples)
    elif opt.family == FAMILY_COMP:
        result = run_comp(model, spec, batches, opt.algo, cfg.t_opt, cfg.k1, cfg.k2, rng,
                          me=cfg.memory_efficient, pool=pool, params=opt.params, selection_samples=samples)
    elif opt.family == FAMILY_SECOND:
        result = run_second_order(model, spec, batches, opt.algo, cfg.t_opt, cfg.minibatch, rng, pool,
                                  cfg.k1, cfg.k2, opt.params, samples)
    else:
        raise ConfigError(f"Unknown optimiser family: {opt.family}")

    score = selection_scorer(model, spec, pool, rng, samples, cfg.q)
    final_value = _guarded_score(score, result.x, f"{opt.algo} result")
    start_value = _guarded_score(score, restarts.best, "best restart")
    if start_value > final_value:
        logger.debug("%s result (%.6g) below best restart (%.6g); keeping the restart",
                     opt.algo, final_value, start_value)
        return MaximisationResult(restarts.best, start_value, result.restart_values, result.dropped)
    return MaximisationResult(result.x, final_value, result.restart_values, result.dropped)


def _query(black_box, batch):
    return np.array([float(black_box(x)) for x in batch])


def _as_callable(black_box):
    if isinstance(black_box, SyntheticTask):
        return black_box.evaluate_unit
    return black_box


def bo_step(state, cfg, black_box, rng):
    """
    One acquisition step

    Args:
        state (BoState): Data so far, at least one point
        cfg (BoConfig): Run settings
        black_box (callable): Unit-box d-vector -> raw value
        rng (np.random.Generator): Generator of this step

    Returns:
        tuple: (new BoState, TraceRow)
    """
    if state.outputs.size == 0:
        raise ValueError("bo_step needs at least one observation")
    t = state.step + 1
    dataset = Dataset.from_raw(state.inputs, state.outputs)
    with stopwatch() as fit_time:
        model = fit(dataset, init=state.params, budget=cfg.fit_steps, n_restarts=cfg.fit_restarts, rng=rng)
    spec = cfg.acq.with_incumbent(float(np.max(dataset.outputs)))

    with stopwatch() as opt_time:
        pool = SamplePool.draw(cfg.pool_size, cfg.q, derive_seed(cfg.seed, "pool", t)) if cfg.uses_pool else None
        samples = cfg.k2 if cfg.memory_efficient else config.ERM_SELECTION_SAMPLES
        restarts = select_restarts(model, spec, cfg.n_raw, cfg.n_restarts, rng, cfg.q, pool,
                                   cfg.restart_strategy, samples)
        result = maximise_acquisition(model, spec, cfg, restarts, rng, pool)

    batch = np.clip(result.x, 0.0, 1.0)
    values = _query(black_box, batch)
    new_state = BoState(np.vstack([state.inputs, batch]), np.concatenate([state.outputs, values]),
                        model.params, t)
    row = TraceRow(t, batch, values, new_state.incumbent, None, fit_time["ms"], opt_time["ms"],
                   result.value, result.dropped)
    return new_state, row


def initial_design(cfg, black_box, dim):
    """
    Uniform initial design

    Args:
        cfg (BoConfig): Run settings
        black_box (callable): Unit-box d-vector -> raw value
        dim (int): Input dimension

    Returns:
        tuple: (BoState, TraceRow for step 0)
    """
    rng = make_rng(cfg.seed, "init")
    inputs = rng.random((cfg.n_init, dim))
    outputs = _query(black_box, inputs)
    state = BoState(inputs, outputs, None, 0)
    return state, TraceRow(0, inputs, outputs, state.incumbent)


def run_bo(cfg, black_box, dim=None):
    """
    Full BO run: initial design followed by n_steps acquisition steps

    Args:
        cfg (BoConfig): Run settings
        black_box (SyntheticTask or callable): Task, or a function on the unit box
        dim (int, optional): Input dimension, required for plain callables

    Returns:
        BoTrace: One row per step; regret is filled in for tasks
    """
    task = black_box if isinstance(black_box, SyntheticTask) else None
    if dim is None:
        if task is None:
            raise ValueError("dim is required when the black box is not a SyntheticTask")
        dim = task.dim
    evaluate = _as_callable(black_box)
    label = task.name if task else getattr(black_box, "__name__", "black box")
    logger.info("run start: %s d=%d %s/%s/%s seed=%d", label, dim, cfg.acq.kind, cfg.optimiser.form,
                cfg.optimiser.algo, cfg.seed)

    state, row = initial_design(cfg, evaluate, dim)
    trace = BoTrace([row])
    for t in range(1, cfg.n_steps + 1):
        state, row = bo_step(state, cfg, evaluate, make_rng(cfg.seed, "step", t))
        trace.rows.append(row)
        regret = normalised_regret(trace.incumbents, task)[-1].regret if task is not None else float("nan")
        logger.info("step %d/%d: incumbent %.6g, regret %.4g, fit %.1f ms, opt %.1f ms",
                    t, cfg.n_steps, row.incumbent, regret, row.fit_ms, row.opt_ms)

    if task is not None:
        for row, regret in zip(trace.rows, normalised_regret(trace.incumbents, task)):
            row.regret = regret.regret
    logger.info("run finish: %s seed=%d incumbent %.6g", label, cfg.seed, trace.rows[-1].incumbent)
    return trace
