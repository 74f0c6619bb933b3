#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Batch Monte-Carlo acquisition functions

Reparameterised EI, PI, SR and UCB over a q-batch, evaluated in the ERM,
finite-sum (FSM), compositional and memory-efficient compositional
forms. The compositional form writes the finite sum as f(E_w[g_w]) where
g_w is a q x M matrix that is zero except for column w.

Sample columns are indexed from 0.
"""

import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import expit

import config
from src.utils.constants import ACQUISITION_FORMS, ACQUISITION_KINDS
from src.utils.errors import DimensionMismatch, IndexOutOfRange

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AcquisitionSpec:
    """
    What to maximise

    Attributes:
        kind (str): "EI", "PI", "SR" or "UCB"
        form (str): "ERM", "FSM", "COMP" or "COMP_ME"
        beta (float): UCB exploration weight
        tau (float): PI sigmoid temperature
        incumbent (float): Best observed standardised output
    """

    kind: str
    form: str = "FSM"
    beta: float = config.UCB_BETA
    tau: float = config.PI_TAU
    incumbent: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", self.kind.upper())
        object.__setattr__(self, "form", self.form.upper())
        if self.kind not in ACQUISITION_KINDS:
            raise ValueError(f"Unknown acquisition kind: {self.kind}")
        if self.form not in ACQUISITION_FORMS:
            raise ValueError(f"Unknown acquisition form: {self.form}")
        if not (self.beta > 0 and self.tau > 0):
            raise ValueError(f"beta and tau must be positive, got beta={self.beta}, tau={self.tau}")

    def with_incumbent(self, incumbent):
        return replace(self, incumbent=float(incumbent))


class SampleLedger:
    """Counts standard-normal values held by pools and by fresh draws"""

    def __init__(self):
        self.reset()

    def reset(self):
        """Forget everything recorded so far"""
        self.pools = 0
        self.pool_values = 0
        self.draws = 0
        self.largest_draw = 0

    def record_pool(self, n_values):
        self.pools += 1
        self.pool_values = max(self.pool_values, n_values)

    def record_draw(self, n_values):
        self.draws += 1
        self.largest_draw = max(self.largest_draw, n_values)

    def __repr__(self):
        return (f"SampleLedger(pools={self.pools}, pool_values={self.pool_values}, "
                f"draws={self.draws}, largest_draw={self.largest_draw})")


# Per-process ledger
ledger = SampleLedger()


@dataclass(frozen=True, eq=False)
class SamplePool:
    """
    Fixed pool of standard-normal vectors

    Attributes:
        z (np.ndarray): M x q draws
        seed (int): Seed the pool was drawn with
    """

    z: np.ndarray
    seed: int = 0

    @classmethod
    def draw(cls, m, q, seed):
        """
        Draw a pool of M standard-normal q-vectors

        Args:
            m (int): Pool size M
            q (int): Batch size
            seed (int): Seed for numpy.random.default_rng

        Returns:
            SamplePool: The pool
        """
        if m < 1:
            raise ValueError(f"pool size must be at least 1, got {m}")
        z = np.random.default_rng(seed).standard_normal((m, q))
        ledger.record_pool(z.size)
        return cls(z, seed)

    @property
    def m(self):
        return self.z.shape[0]

    @property
    def q(self):
        return self.z.shape[1]


@dataclass(frozen=True, eq=False)
class InnerValue:
    """
    One inner vector v_w

    Attributes:
        v (np.ndarray): q-vector
        column_index (int): Pool column, None for fresh draws
    """

    v: np.ndarray
    column_index: int = None


@dataclass(frozen=True, eq=False)
class ColumnEstimate:
    """
    Sparse q x M matrix holding a (minibatch) average of g_w

    Attributes:
        columns (np.ndarray): Distinct touched column indices
        values (np.ndarray): q x len(columns) entries of those columns
        n_columns (int): M
    """

    columns: np.ndarray
    values: np.ndarray
    n_columns: int

    def dense(self):
        """Materialise the q x M matrix"""
        out = np.zeros((self.values.shape[0], self.n_columns))
        out[:, self.columns] = self.values
        return out


def draw_normals(rng, k, q):
    """
    Fresh K x q standard-normal draws, recorded in the ledger

    Args:
        rng (np.random.Generator): Caller-owned generator
        k (int): Number of draws
        q (int): Batch size

    Returns:
        np.ndarray: k x q
    """
    z = rng.standard_normal((k, q))
    ledger.record_draw(z.size)
    return z


def sample_indices(rng, m, k):
    """
    K distinct pool columns; the whole pool in order when K >= M

    Args:
        rng (np.random.Generator): Caller-owned generator
        m (int): Pool size
        k (int): Minibatch size

    Returns:
        np.ndarray: Column indices
    """
    if k >= m:
        return np.arange(m)
    return rng.choice(m, size=k, replace=False)


def inner_values(kind, posterior, z, spec):
    """
    Inner vectors for a stack of standard-normal draws

    Args:
        kind (str): Acquisition kind
        posterior (BatchPosterior): Batch posterior
        z (np.ndarray): K x q draws
        spec (AcquisitionSpec): Constants

    Returns:
        np.ndarray: K x q matrix whose row k is v for z[k]
    """
    z = np.atleast_2d(z)
    if z.shape[1] != posterior.q:
        raise DimensionMismatch(f"draws have {z.shape[1]} columns, batch size is {posterior.q}")
    lz = z @ posterior.chol.T
    if kind == "EI":
        return np.maximum(posterior.mean + lz - spec.incumbent, 0.0)
    if kind == "PI":
        return (posterior.mean + lz - spec.incumbent) / spec.tau
    if kind == "SR":
        return posterior.mean + lz
    if kind == "UCB":
        return posterior.mean + np.sqrt(spec.beta * np.pi / 2.0) * np.abs(lz)
    raise ValueError(f"Unknown acquisition kind: {kind}")


def wrap(kind, v):
    """Sigmoid for PI, identity otherwise"""
    return expit(v) if kind == "PI" else v


def inner_v(kind, posterior, z_m, spec):
    """
    Inner vector for a single draw

    Args:
        kind (str): Acquisition kind
        posterior (BatchPosterior): Batch posterior
        z_m (np.ndarray): q-vector
        spec (AcquisitionSpec): Constants

    Returns:
        InnerValue: v for z_m
    """
    return InnerValue(inner_values(kind, posterior, np.asarray(z_m, dtype=float)[None, :], spec)[0])


def max_average(kind, v):
    """Mean over rows of the batch maximum of the wrapped inner values"""
    return float(np.mean(np.max(wrap(kind, v), axis=1)))


def acq_fsm(kind, posterior, pool, spec):
    """
    Finite-sum acquisition value

    Args:
        kind (str): Acquisition kind
        posterior (BatchPosterior): Batch posterior
        pool (SamplePool): Fixed pool of M draws
        spec (AcquisitionSpec): Constants

    Returns:
        float: (1/M) sum_m max_j wrap(v_m)_j
    """
    return max_average(kind, inner_values(kind, posterior, pool.z, spec))


def minibatch_estimate(kind, posterior, pool, indices, spec):
    """
    (1/K) sum_k g_{w_k} over the given pool columns

    Args:
        kind (str): Acquisition kind
        posterior (BatchPosterior): Batch posterior
        pool (SamplePool): Pool of M draws
        indices (np.ndarray): K column indices, repeats allowed
        spec (AcquisitionSpec): Constants

    Returns:
        ColumnEstimate: Sparse average
    """
    indices = np.asarray(indices)
    if indices.size == 0:
        raise ValueError("minibatch must contain at least one column")
    columns, counts = np.unique(indices, return_counts=True)
    v = inner_values(kind, posterior, pool.z[columns], spec)
    return ColumnEstimate(columns, (v.T * counts) / indices.size, pool.m)


def outer_value(kind, estimate):
    """
    Outer function f applied to a sparse q x M matrix

    EI/SR/UCB: sum_m max_j A_jm. PI: (1/M) sum_m max_j Sig(M A_jm), where an
    untouched column contributes Sig(0).

    Args:
        kind (str): Acquisition kind
        estimate (ColumnEstimate): Matrix A

    Returns:
        float: f(A)
    """
    m = estimate.n_columns
    untouched = m - estimate.columns.size
    if kind == "PI":
        touched = np.sum(np.max(expit(m * estimate.values), axis=0))
        return float((touched + 0.5 * untouched) / m)
    return float(np.sum(np.max(estimate.values, axis=0)))


def outer_dense(kind, a):
    """outer_value for a dense q x M matrix"""
    return outer_value(kind, ColumnEstimate(np.arange(a.shape[1]), a, a.shape[1]))


def acq_comp(kind, posterior, pool, spec):
    """
    Compositional acquisition value f(E_w[g_w])

    Equal to acq_fsm up to rounding.

    Args:
        kind (str): Acquisition kind
        posterior (BatchPosterior): Batch posterior
        pool (SamplePool): Fixed pool of M draws
        spec (AcquisitionSpec): Constants

    Returns:
        float: f((1/M) [v_1 ... v_M])
    """
    return outer_value(kind, minibatch_estimate(kind, posterior, pool, np.arange(pool.m), spec))


def inner_matrix_stochastic(kind, posterior, omega, pool, spec):
    """
    g_w: the q x M matrix that is zero except for column w

    Args:
        kind (str): Acquisition kind
        posterior (BatchPosterior): Batch posterior
        omega (int): Column index in [0, M)
        pool (SamplePool): Pool of M draws
        spec (AcquisitionSpec): Constants

    Returns:
        ColumnEstimate: Single-column sparse matrix

    Raises:
        IndexOutOfRange: If omega is not a pool column
    """
    if not 0 <= omega < pool.m:
        raise IndexOutOfRange(f"column {omega} outside pool of size {pool.m}")
    v = inner_values(kind, posterior, pool.z[omega][None, :], spec)[0]
    return ColumnEstimate(np.array([omega]), v[:, None], pool.m)


def inner_matrix_me(kind, posterior, k_draws, rng, spec):
    """
    Memory-efficient inner matrix from K fresh draws

    Args:
        kind (str): Acquisition kind
        posterior (BatchPosterior): Batch posterior
        k_draws (int): K
        rng (np.random.Generator): Caller-owned generator
        spec (AcquisitionSpec): Constants

    Returns:
        np.ndarray: q x K matrix [v_{z_1} ... v_{z_K}]
    """
    if k_draws < 1:
        raise ValueError(f"k_draws must be at least 1, got {k_draws}")
    return inner_values(kind, posterior, draw_normals(rng, k_draws, posterior.q), spec).T


def outer_me(kind, a):
    """
    Memory-efficient outer function

    Args:
        kind (str): Acquisition kind
        a (np.ndarray): q x K matrix

    Returns:
        float: (1/K) sum_m max_j wrap(A_jm)
    """
    return float(np.mean(np.max(wrap(kind, a), axis=0)))


def acq_erm_sample(kind, posterior, minibatch_size, rng, spec):
    """
    ERM estimate with fresh draws

    Args:
        kind (str): Acquisition kind
        posterior (BatchPosterior): Batch posterior
        minibatch_size (int): Number of fresh draws
        rng (np.random.Generator): Caller-owned generator
        spec (AcquisitionSpec): Constants

    Returns:
        float: Minibatch mean of max_j wrap(v)_j
    """
    if minibatch_size < 1:
        raise ValueError(f"minibatch_size must be at least 1, got {minibatch_size}")
    z = draw_normals(rng, minibatch_size, posterior.q)
    return max_average(kind, inner_values(kind, posterior, z, spec))
