#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Gaussian-process surrogate

Zero-mean GP on standardised outputs with a Matern 5/2 ARD kernel.
Hyperparameters are fitted by penalised NLML with L-BFGS; posteriors over
a q-batch come with derivatives of the mean and of the Cholesky factor.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import stats

import config
from src.optim.lbfgs import lbfgs_run
from src.surrogate import kernel as kern
from src.surrogate.kernel import KernelParams
from src.surrogate.linalg import (chol_pushforward, chol_solve, cholesky,
                                  logdet_from_chol, solve_lower, solve_upper_t)
from src.utils.errors import DimensionMismatch, FitFailed, NotPositiveDefinite

logger = logging.getLogger(__name__)

LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    Observations on the unit box

    Attributes:
        inputs (np.ndarray): n x d inputs in [0, 1]^d
        outputs (np.ndarray): Standardised outputs
        raw_output_mean (float): Mean removed by standardisation
        raw_output_std (float): Scale removed by standardisation (1 if outputs are constant)
    """

    inputs: np.ndarray
    outputs: np.ndarray
    raw_output_mean: float = 0.0
    raw_output_std: float = 1.0

    def __post_init__(self):
        if self.inputs.ndim != 2 or self.inputs.shape[0] != self.outputs.shape[0]:
            raise DimensionMismatch(f"inputs {self.inputs.shape} and outputs {self.outputs.shape} disagree")
        if self.inputs.size and (self.inputs.min() < -1e-12 or self.inputs.max() > 1 + 1e-12):
            raise ValueError("dataset inputs must lie in the unit box")
        if self.raw_output_std <= 0:
            raise ValueError(f"raw_output_std must be positive, got {self.raw_output_std}")

    @classmethod
    def from_raw(cls, inputs, raw_outputs):
        """
        Standardise raw observations

        Args:
            inputs (np.ndarray): n x d unit-box inputs
            raw_outputs (np.ndarray): n raw objective values

        Returns:
            Dataset: Standardised dataset
        """
        inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
        raw = np.asarray(raw_outputs, dtype=float).ravel()
        mean = float(raw.mean()) if raw.size else 0.0
        std = float(raw.std()) if raw.size else 0.0
        if not std > 0:
            std = 1.0
        return cls(inputs, (raw - mean) / std, mean, std)

    @classmethod
    def empty(cls, dim):
        return cls(np.zeros((0, dim)), np.zeros(0))

    @property
    def n(self):
        return self.inputs.shape[0]

    @property
    def dim(self):
        return self.inputs.shape[1]

    def to_raw(self, standardised):
        """Map standardised values back to the raw output scale"""
        return np.asarray(standardised) * self.raw_output_std + self.raw_output_mean


@dataclass(frozen=True)
class GammaPrior:
    """
    Independent Gamma prior on the lengthscales

    Attributes:
        shape (float): Shape parameter
        rate (float): Rate parameter
    """

    shape: float = config.GAMMA_PRIOR_SHAPE
    rate: float = config.GAMMA_PRIOR_RATE

    def log_pdf(self, lengthscales):
        return float(np.sum(stats.gamma.logpdf(lengthscales, a=self.shape, scale=1.0 / self.rate)))

    def grad_log_lengthscales(self, lengthscales):
        """Derivative of log_pdf with respect to log lengthscales"""
        return (self.shape - 1.0) - self.rate * lengthscales


@dataclass(frozen=True, eq=False)
class GpModel:
    """
    Conditioned GP

    Attributes:
        dataset (Dataset): Training data
        params (KernelParams): Hyperparameters
        chol_c (np.ndarray): Cholesky factor of C = K + sigma^2 I
        alpha (np.ndarray): C^-1 y
    """

    dataset: Dataset
    params: KernelParams
    chol_c: np.ndarray
    alpha: np.ndarray

    @classmethod
    def build(cls, dataset, params):
        """
        Condition a GP on a dataset

        Args:
            dataset (Dataset): Training data (may be empty)
            params (KernelParams): Hyperparameters

        Returns:
            GpModel: Conditioned model
        """
        if dataset.n and params.dim != dataset.dim:
            raise DimensionMismatch(f"{params.dim} lengthscales for {dataset.dim}-d inputs")
        if dataset.n == 0:
            return cls(dataset, params, np.zeros((0, 0)), np.zeros(0))
        c = kern.gram(dataset.inputs, dataset.inputs, params) + params.noise_variance * np.eye(dataset.n)
        chol_c, _ = cholesky(c)
        return cls(dataset, params, chol_c, chol_solve(chol_c, dataset.outputs))

    @property
    def dim(self):
        return self.params.dim


@dataclass(frozen=True, eq=False)
class BatchPosterior:
    """
    Joint posterior over a q-batch

    Attributes:
        mean (np.ndarray): q-vector
        cov (np.ndarray): q x q covariance
        chol (np.ndarray): Lower factor with chol @ chol.T = cov + jitter I
        jitter (float): Jitter used by the factorisation
        dmean (np.ndarray): q x (d q) Jacobian of the mean, or None
        dchol (np.ndarray): q x q x (d q) Jacobian of chol, or None
    """

    mean: np.ndarray
    cov: np.ndarray
    chol: np.ndarray
    jitter: float = 0.0
    dmean: np.ndarray = None
    dchol: np.ndarray = None

    @property
    def q(self):
        return self.mean.shape[0]

    @classmethod
    def fixed(cls, mean, chol, dim=1):
        """Posterior with given mean and factor that does not depend on the inputs"""
        mean = np.asarray(mean, dtype=float)
        chol = np.asarray(chol, dtype=float)
        q = mean.shape[0]
        return cls(mean, chol @ chol.T, chol, 0.0, np.zeros((q, q * dim)), np.zeros((q, q, q * dim)))


def _regularised_gram(dataset, params):
    return kern.gram(dataset.inputs, dataset.inputs, params) + params.noise_variance * np.eye(dataset.n)


def nlml(dataset, params):
    """
    Negative log marginal likelihood

    Args:
        dataset (Dataset): Non-empty dataset
        params (KernelParams): Hyperparameters

    Returns:
        float: 1/2 logdet C + 1/2 y^T C^-1 y + n/2 log 2 pi
    """
    if dataset.n == 0:
        raise ValueError("nlml needs a non-empty dataset")
    chol_c, _ = cholesky(_regularised_gram(dataset, params))
    alpha = chol_solve(chol_c, dataset.outputs)
    y = dataset.outputs
    return 0.5 * logdet_from_chol(chol_c) + 0.5 * float(y @ alpha) + 0.5 * dataset.n * LOG_2PI


def nlml_and_grad(dataset, theta):
    """
    NLML and its gradient with respect to the log-parameters

    Args:
        dataset (Dataset): Non-empty dataset
        theta (np.ndarray): Log-parameters as in KernelParams.to_log

    Returns:
        tuple: (value, gradient)
    """
    params = KernelParams.from_log(theta)
    chol_c, _ = cholesky(_regularised_gram(dataset, params))
    y = dataset.outputs
    alpha = chol_solve(chol_c, y)
    value = 0.5 * logdet_from_chol(chol_c) + 0.5 * float(y @ alpha) + 0.5 * dataset.n * LOG_2PI
    c_inv = chol_solve(chol_c, np.eye(dataset.n))
    weight = c_inv - np.outer(alpha, alpha)
    d_c = kern.gram_grad_log_params(dataset.inputs, params)
    grad = 0.5 * np.einsum("ij,kij->k", weight, d_c)
    return value, grad


def penalised_objective(dataset, prior):
    """
    Build the maximised objective -(nlml - log prior) over log-parameters

    Args:
        dataset (Dataset): Training data
        prior (GammaPrior): Lengthscale prior, or None

    Returns:
        callable: theta -> (value, grad), value -inf where C cannot be factorised
    """
    d = dataset.dim

    def objective(theta):
        try:
            value, grad = nlml_and_grad(dataset, theta)
        except NotPositiveDefinite:
            return -np.inf, np.zeros_like(theta)
        value, grad = -value, -grad
        if prior is not None:
            ls = np.exp(theta[:d])
            value += prior.log_pdf(ls)
            grad[:d] += prior.grad_log_lengthscales(ls)
        return value, grad

    return objective


def fit(dataset, init=None, prior=None, budget=config.GP_FIT_STEPS,
        n_restarts=config.GP_FIT_RESTARTS, rng=None):
    """
    Fit kernel hyperparameters by penalised NLML

    Starts L-BFGS from `init` and from n_restarts - 1 perturbations of it.

    Args:
        dataset (Dataset): Non-empty training data
        init (KernelParams, optional): Starting parameters
        prior (GammaPrior, optional): Lengthscale prior. Defaults to GammaPrior()
        budget (int): L-BFGS steps per restart
        n_restarts (int): Total number of starts
        rng (np.random.Generator, optional): Source of the perturbations

    Returns:
        GpModel: Model conditioned on the best parameters found

    Raises:
        FitFailed: If every start fails to factorise
    """
    if dataset.n == 0:
        raise ValueError("fit needs a non-empty dataset")
    if init is None:
        init = KernelParams.default(dataset.dim)
    if prior is None:
        prior = GammaPrior()
    if rng is None:
        rng = np.random.default_rng(0)

    lower, upper = KernelParams.log_bounds(dataset.dim)
    objective = penalised_objective(dataset, prior)
    theta0 = np.clip(init.to_log(), lower, upper)
    starts = [theta0] + [np.clip(theta0 + rng.normal(0.0, 1.0, theta0.shape), lower, upper)
                         for _ in range(n_restarts - 1)]

    best = None
    for k, start in enumerate(starts):
        result = lbfgs_run(objective, start, budget, lower=lower, upper=upper)
        if not np.isfinite(result.value):
            logger.debug("GP fit restart %d failed to factorise", k)
            continue
        logger.debug("GP fit restart %d: objective %.6f (%s)", k, result.value, result.status)
        if best is None or result.value > best.value:
            best = result
    if best is None:
        raise FitFailed(f"all {n_restarts} fitting restarts failed on {dataset.n} points")
    return GpModel.build(dataset, KernelParams.from_log(best.x))


def posterior(model, xq, with_grads=False, jitter=config.CHOLESKY_JITTER):
    """
    Joint posterior over a batch of query points

    Args:
        model (GpModel): Conditioned GP
        xq (np.ndarray): q x d batch in the unit box
        with_grads (bool): Also compute dmean and dchol
        jitter (float): Base jitter for the posterior factor

    Returns:
        BatchPosterior: Posterior over the batch
    """
    xq = np.atleast_2d(np.asarray(xq, dtype=float))
    q, d = xq.shape
    if d != model.dim:
        raise DimensionMismatch(f"batch has {d} columns, model expects {model.dim}")
    params = model.params
    data = model.dataset

    k_qq = kern.gram(xq, xq, params)
    if data.n:
        k_nq = kern.gram(data.inputs, xq, params)
        v = solve_lower(model.chol_c, k_nq)
        mean = k_nq.T @ model.alpha
        cov = k_qq - v.T @ v
        weights = solve_upper_t(model.chol_c, v)
    else:
        mean = np.zeros(q)
        cov = k_qq
        weights = np.zeros((0, q))
    cov = 0.5 * (cov + cov.T)
    chol, used = cholesky(cov, jitter)
    if not with_grads:
        return BatchPosterior(mean, cov, chol, used)

    # Jacobian columns are ordered like xq.ravel(): index p * d + r
    g_qn = kern.gram_grad_x(xq, data.inputs, params)
    dmean = np.zeros((q, q * d))
    for p in range(q):
        dmean[p, p * d:(p + 1) * d] = g_qn[p].T @ model.alpha

    g_qq = kern.gram_grad_x(xq, xq, params)
    rows = g_qq.transpose(0, 2, 1) - np.einsum("pnr,nb->prb", g_qn, weights)
    rows = rows.reshape(q * d, q)
    idx = np.arange(q * d)
    owner = idx // d
    d_sigma = np.zeros((q * d, q, q))
    d_sigma[idx, owner, :] += rows
    d_sigma[idx, :, owner] += rows
    dchol = chol_pushforward(chol, d_sigma).transpose(1, 2, 0)
    return BatchPosterior(mean, cov, chol, used, dmean, dchol)
