#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Zero-order acquisition maximisers

Random search, CMA-ES and differential evolution over the flattened
batch space [0, 1]^{dq}. Each method only needs an objective mapping a
dq-vector to a float, so the same code serves ERM, FSM and compositional
acquisition estimates. Out-of-box points are clipped before evaluation.
"""

import logging
from dataclasses import dataclass, replace

import numpy as np

import config
from src.acquisition.functions import (acq_erm_sample, max_average, inner_values,
                                       minibatch_estimate, outer_value, sample_indices)
from src.optim.results import MaximisationResult, selection_scorer
from src.surrogate.gp import posterior
from src.utils.errors import ConfigError, NonFiniteState
from src.utils.helpers import clip_unit

logger = logging.getLogger(__name__)

ZERO_ORDER_ALGOS = ("rs", "cmaes", "de")

# Step-size bounds keep the sampling distribution finite
_STEP_MIN = 1e-16
_STEP_MAX = 1e4


def random_search(objective, budget, dim, rng):
    """
    Best of `budget` uniform samples from the unit box

    Args:
        objective (callable): dim-vector -> float
        budget (int): Number of evaluations
        dim (int): Dimension of the search space
        rng (np.random.Generator): Caller-owned generator

    Returns:
        tuple: (best point, best value)
    """
    if budget < 1:
        raise ValueError(f"random search budget must be at least 1, got {budget}")
    best_x, best_value = None, -np.inf
    for _ in range(budget):
        x = rng.random(dim)
        value = float(objective(x))
        if best_x is None or value > best_value:
            best_x, best_value = x, value
    return best_x, best_value


@dataclass(frozen=True, eq=False)
class CmaState:
    """
    Search distribution of CMA-ES

    Attributes:
        mean (np.ndarray): Distribution mean
        step (float): Global step size sigma
        cov (np.ndarray): Covariance matrix
        path_sigma (np.ndarray): Conjugate evolution path
        path_cov (np.ndarray): Evolution path of the covariance
        generation (int): Generations completed
        best_x (np.ndarray): Best point evaluated so far
        best_value (float): Objective at best_x
    """

    mean: np.ndarray
    step: float
    cov: np.ndarray
    path_sigma: np.ndarray
    path_cov: np.ndarray
    generation: int = 0
    best_x: np.ndarray = None
    best_value: float = -np.inf

    @property
    def dim(self):
        return self.mean.shape[0]


def cma_init(mean, step=config.CMA_INIT_STEP):
    """
    Initial CMA-ES state

    Args:
        mean (np.ndarray): Starting mean, flattened into the box
        step (float): Initial step size

    Returns:
        CmaState: State with identity covariance and zero paths
    """
    if step <= 0:
        raise ValueError(f"CMA-ES step size must be positive, got {step}")
    mean = clip_unit(np.asarray(mean, dtype=float).ravel())
    n = mean.shape[0]
    return CmaState(mean, float(step), np.eye(n), np.zeros(n), np.zeros(n), 0, mean.copy(), -np.inf)


def default_offspring(dim):
    """Population size 4 + floor(3 ln n)"""
    return 4 + int(3 * np.log(dim))


def cma_weights(parents):
    """Linear recombination weights w_i proportional to parents - i + 1, summing to one"""
    raw = np.arange(parents, 0, -1, dtype=float)
    return raw / raw.sum()


def _cov_factor(cov):
    # eigh gives B diag(D^2) B^T; tiny or negative eigenvalues are raised to keep cov SPD
    cov = 0.5 * (cov + cov.T)
    eigval, eigvec = np.linalg.eigh(cov)
    floor = 1e-14 * max(1.0, float(np.max(eigval)))
    if eigval.min() < floor:
        logger.debug("CMA-ES covariance re-jittered (min eigenvalue %.3e)", eigval.min())
        eigval = np.maximum(eigval, floor)
        cov = (eigvec * eigval) @ eigvec.T
    return cov, eigvec, np.sqrt(eigval)


def cma_step(state, objective, offspring, rng, mean_lr=1.0, path_threshold=config.CMA_PATH_THRESHOLD):
    """
    One CMA-ES generation (maximisation)

    Args:
        state (CmaState): Current distribution
        objective (callable): n-vector -> float
        offspring (int): Samples per generation, at least 3
        rng (np.random.Generator): Caller-owned generator
        mean_lr (float): Mean learning rate
        path_threshold (float): Stall threshold of the covariance path, in units of sqrt(n)

    Returns:
        CmaState: Updated distribution
    """
    if offspring < 3:
        raise ValueError(f"CMA-ES needs more than 2 offspring, got {offspring}")
    n = state.dim
    parents = max(1, offspring // 2)
    weights = cma_weights(parents)
    mu_eff = 1.0 / np.sum(weights ** 2)

    c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0)
    d_sigma = 1.0 + c_sigma
    c_c = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n)
    c_1 = 2.0 / ((n + 1.3) ** 2 + mu_eff)
    c_mu = min(1.0 - c_1, 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0) ** 2 + mu_eff))
    chi_n = np.sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n ** 2))

    cov, basis, scales = _cov_factor(state.cov)
    z = rng.standard_normal((offspring, n))
    samples = clip_unit(state.mean + state.step * (z * scales) @ basis.T)
    values = np.array([float(objective(x)) for x in samples])
    order = np.argsort(-values, kind="stable")

    best_x, best_value = state.best_x, state.best_value
    if values[order[0]] > best_value:
        best_x, best_value = samples[order[0]].copy(), float(values[order[0]])

    # Steps are taken from the clipped samples
    top = (samples[order[:parents]] - state.mean) / state.step
    y_w = weights @ top
    mean = state.mean + mean_lr * state.step * y_w

    inv_sqrt = (basis / scales) @ basis.T
    path_sigma = (1.0 - c_sigma) * state.path_sigma + np.sqrt(c_sigma * (2.0 - c_sigma) * mu_eff) * inv_sqrt @ y_w
    h_sigma = np.linalg.norm(path_sigma) <= path_threshold * np.sqrt(n)
    path_cov = (1.0 - c_c) * state.path_cov + h_sigma * np.sqrt(c_c * (2.0 - c_c) * mu_eff) * y_w

    rank_mu = (top.T * weights) @ top
    cov = (1.0 - c_1 - c_mu * weights.sum()) * cov + c_1 * np.outer(path_cov, path_cov) + c_mu * rank_mu
    step = state.step * np.exp((c_sigma / d_sigma) * (np.linalg.norm(path_sigma) / chi_n - 1.0))
    step = float(np.clip(step, _STEP_MIN, _STEP_MAX))

    new = CmaState(mean, step, 0.5 * (cov + cov.T), path_sigma, path_cov,
                   state.generation + 1, best_x, best_value)
    if not (np.all(np.isfinite(new.mean)) and np.all(np.isfinite(new.cov))
            and np.all(np.isfinite(new.path_sigma)) and np.all(np.isfinite(new.path_cov))):
        raise NonFiniteState(f"CMA-ES state became non-finite at generation {new.generation}")
    return new


@dataclass(frozen=True, eq=False)
class DePopulation:
    """
    Differential-evolution population

    Attributes:
        members (np.ndarray): P x n points in the box
        fitness (np.ndarray): Objective at every member
        f_scale (float): Differential weight F in [0, 2]
        p_mutation (float): Per-coordinate mutation probability
    """

    members: np.ndarray
    fitness: np.ndarray
    f_scale: float = config.DE_F_SCALE
    p_mutation: float = config.DE_P_MUTATION

    def __post_init__(self):
        if not 0.0 <= self.f_scale <= 2.0:
            raise ValueError(f"F must lie in [0, 2], got {self.f_scale}")
        if not 0.0 <= self.p_mutation <= 1.0:
            raise ValueError(f"p_mutation must lie in [0, 1], got {self.p_mutation}")
        if self.members.shape[0] != self.fitness.shape[0]:
            raise ValueError(f"{self.members.shape[0]} members but {self.fitness.shape[0]} fitness values")

    @property
    def size(self):
        return self.members.shape[0]

    def best(self):
        """(point, value) of the fittest member"""
        k = int(np.argmax(self.fitness))
        return self.members[k], float(self.fitness[k])


@dataclass(frozen=True, eq=False)
class DeProposal:
    """
    Trial points of one DE generation

    Attributes:
        trials (np.ndarray): P x n candidates before clipping
        mask (np.ndarray): P x n, True where the coordinate was mutated
        donors (np.ndarray): P x 3 indices (a, b, c) used per member
    """

    trials: np.ndarray
    mask: np.ndarray
    donors: np.ndarray


def de_init(objective, size, dim, rng, members=None, f_scale=config.DE_F_SCALE,
            p_mutation=config.DE_P_MUTATION):
    """
    Evaluate an initial population

    Args:
        objective (callable): n-vector -> float
        size (int): Population size P
        dim (int): Dimension n
        rng (np.random.Generator): Caller-owned generator
        members (np.ndarray, optional): Seed points; missing members are drawn uniformly
        f_scale (float): Differential weight
        p_mutation (float): Mutation probability

    Returns:
        DePopulation: Evaluated population
    """
    if size < 4:
        raise ValueError(f"DE needs at least 4 members, got {size}")
    seeded = np.zeros((0, dim)) if members is None else clip_unit(np.atleast_2d(members)[:size])
    fresh = rng.random((size - seeded.shape[0], dim))
    points = np.vstack([seeded, fresh])
    fitness = np.array([float(objective(x)) for x in points])
    return DePopulation(points, fitness, f_scale, p_mutation)


def de_propose(pop, rng):
    """
    Mutation proposals for every member

    Donors a, b, c are distinct and differ from the member. One randomly
    chosen coordinate always mutates; every other coordinate mutates with
    probability p_mutation.

    Args:
        pop (DePopulation): Current population
        rng (np.random.Generator): Caller-owned generator

    Returns:
        DeProposal: Trials and bookkeeping
    """
    size, dim = pop.members.shape
    trials = pop.members.copy()
    mask = rng.random((size, dim)) < pop.p_mutation
    donors = np.empty((size, 3), dtype=int)
    for j in range(size):
        others = np.delete(np.arange(size), j)
        donors[j] = rng.choice(others, size=3, replace=False)
        mask[j, rng.integers(dim)] = True
    a, b, c = (pop.members[donors[:, k]] for k in range(3))
    mutant = a + pop.f_scale * (b - c)
    trials[mask] = mutant[mask]
    return DeProposal(trials, mask, donors)


def de_step(pop, objective, rng):
    """
    One synchronous DE generation

    A trial replaces its parent only if it strictly improves the objective.

    Args:
        pop (DePopulation): Current population, at least 4 members
        objective (callable): n-vector -> float
        rng (np.random.Generator): Caller-owned generator

    Returns:
        DePopulation: Next population
    """
    if pop.size < 4:
        raise ValueError(f"DE needs at least 4 members, got {pop.size}")
    trials = clip_unit(de_propose(pop, rng).trials)
    values = np.array([float(objective(x)) for x in trials])
    improved = values > pop.fitness
    members = np.where(improved[:, None], trials, pop.members)
    fitness = np.where(improved, values, pop.fitness)
    return replace(pop, members=members, fitness=fitness)


def zero_order_comp_eval(kind, model, xq, k, rng, spec, pool):
    """
    Compositional acquisition at a minibatch estimate of the inner matrix

    Args:
        kind (str): Acquisition kind
        model (GpModel): Surrogate
        xq (np.ndarray): q x d batch
        k (int): Minibatch size, at most the pool size
        rng (np.random.Generator): Caller-owned generator
        spec (AcquisitionSpec): Constants
        pool (SamplePool): Pool of M draws

    Returns:
        float: f((1/K) sum_k g_{w_k}); equal to acq_comp when K = M
    """
    if not 1 <= k <= pool.m:
        raise ValueError(f"minibatch must lie in [1, {pool.m}], got {k}")
    post = posterior(model, xq)
    return outer_value(kind, minibatch_estimate(kind, post, pool, sample_indices(rng, pool.m, k), spec))


def zero_order_objective(model, spec, q, d, minibatch, rng, pool=None):
    """
    Noisy acquisition estimate over flattened batches

    Args:
        model (GpModel): Surrogate
        spec (AcquisitionSpec): Acquisition and form
        q (int): Batch size
        d (int): Input dimension
        minibatch (int): Draws or pool columns per evaluation
        rng (np.random.Generator): Caller-owned generator
        pool (SamplePool, optional): Pool, required for FSM and COMP

    Returns:
        callable: dq-vector -> float
    """
    if spec.form in ("FSM", "COMP") and pool is None:
        raise ValueError(f"{spec.form} form needs a sample pool")
    kind = spec.kind

    def objective(x):
        xq = x.reshape(q, d)
        if spec.form == "ERM":
            return acq_erm_sample(kind, posterior(model, xq), minibatch, rng, spec)
        if spec.form == "FSM":
            columns = sample_indices(rng, pool.m, minibatch)
            return max_average(kind, inner_values(kind, posterior(model, xq), pool.z[columns], spec))
        return zero_order_comp_eval(kind, model, xq, min(minibatch, pool.m), rng, spec, pool)

    return objective


def run_zero_order(model, spec, x0_batches, algo, t_steps, minibatch, rng, pool=None, params=None,
                   selection_samples=config.ERM_SELECTION_SAMPLES):
    """
    Maximise an acquisition with random search, CMA-ES or DE

    CMA-ES starts its mean at the first restart batch; DE seeds its
    population with the restart batches. Random search ignores the
    restarts and spends `budget` evaluations (32 T m by default).

    Args:
        model (GpModel): Surrogate
        spec (AcquisitionSpec): Acquisition with form ERM, FSM or COMP
        x0_batches (list): Restart q x d batches, most promising first
        algo (str): "rs", "cmaes" or "de"
        t_steps (int): Generations for CMA-ES and DE
        minibatch (int): Draws or pool columns per evaluation
        rng (np.random.Generator): Caller-owned generator
        pool (SamplePool, optional): Pool of the current step
        params (dict, optional): budget, step, offspring, population, f_scale, p_mutation
        selection_samples (int): Fresh draws used for ranking when no pool is given

    Returns:
        MaximisationResult: Best point found, scored like the other families
    """
    params = dict(params or {})
    known = {"budget", "step", "offspring", "population", "f_scale", "p_mutation"}
    unknown = set(params) - known
    if unknown:
        raise ConfigError(f"{algo} has no hyperparameter(s) {sorted(unknown)} (known: {sorted(known)})")
    q, d = np.asarray(x0_batches[0]).shape
    n = q * d
    objective = zero_order_objective(model, spec, q, d, minibatch, rng, pool)

    if algo == "rs":
        budget = int(params.get("budget", config.RS_BUDGET_FACTOR * t_steps * minibatch))
        best_x, _ = random_search(objective, budget, n, rng)
    elif algo == "cmaes":
        state = cma_init(np.asarray(x0_batches[0]).ravel(), params.get("step", config.CMA_INIT_STEP))
        offspring = int(params.get("offspring", default_offspring(n)))
        for _ in range(t_steps):
            state = cma_step(state, objective, offspring, rng)
        best_x = state.best_x
    elif algo == "de":
        size = int(params.get("population", max(config.DE_POPULATION, len(x0_batches))))
        seeds = np.array([np.asarray(x0).ravel() for x0 in x0_batches])
        pop = de_init(objective, size, n, rng, seeds, params.get("f_scale", config.DE_F_SCALE),
                      params.get("p_mutation", config.DE_P_MUTATION))
        for _ in range(t_steps):
            pop = de_step(pop, objective, rng)
        best_x, _ = pop.best()
    else:
        raise ConfigError(f"Unknown zero-order algorithm: {algo}")

    xq = clip_unit(np.asarray(best_x)).reshape(q, d)
    score = selection_scorer(model, spec, pool, rng, selection_samples, q)
    value = float(score(xq))
    if not np.isfinite(value):
        raise NonFiniteState(f"{algo} returned a batch with a non-finite acquisition value")
    return MaximisationResult(xq, value, [value], 0)
