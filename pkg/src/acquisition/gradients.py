#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Acquisition gradients

Reparameterisation gradients of the FSM and ERM estimates, and the
compositional gradient J^T grad f(zeta) evaluated at a tracked zeta.
Gradients are taken with respect to xq.ravel(), so entry p * d + r is
coordinate r of batch point p. Conventions: ReLU'(0) = 0, |.|'(0) = 0,
ties in the batch maximum go to the first index.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from src.acquisition.functions import ColumnEstimate, draw_normals, outer_dense, outer_me, sample_indices, wrap
from src.surrogate.gp import posterior
from src.utils.errors import DimensionMismatch

# Rescale the tracker once its lazy factor falls below this
_RENORMALISE_BELOW = 1e-150


@dataclass(frozen=True, eq=False)
class AcqGradient:
    """
    Gradient and value at one batch

    Attributes:
        g (np.ndarray): dq-vector
        value (float): Acquisition estimate at the same batch
    """

    g: np.ndarray
    value: float


class ZetaTracker:
    """
    Exponentially weighted average of inner-matrix estimates

    Holds a q x n_columns matrix. Columns never touched stay zero. The
    running product of (1 - weight) factors is kept as one scalar, so a
    blend only writes the columns of the new estimate.
    """

    def __init__(self, q, n_columns):
        """
        Initialise an all-zero tracker

        Args:
            q (int): Batch size
            n_columns (int): M for pool-based trackers, K for memory-efficient ones
        """
        self.q = q
        self.n_columns = n_columns
        self._scaled = np.zeros((q, n_columns))
        self._scale = 1.0

    @classmethod
    def from_estimate(cls, estimate):
        tracker = cls(estimate.values.shape[0], estimate.n_columns)
        tracker.blend(estimate, 1.0)
        return tracker

    @classmethod
    def from_matrix(cls, a):
        """Tracker over all columns of a dense matrix"""
        return cls.from_estimate(ColumnEstimate(np.arange(a.shape[1]), a, a.shape[1]))

    def values(self, columns):
        """q x len(columns) entries of the tracked matrix"""
        return self._scale * self._scaled[:, columns]

    def dense(self):
        return self._scale * self._scaled

    def blend(self, estimate, weight):
        """
        zeta <- (1 - weight) zeta + weight * estimate

        Args:
            estimate (ColumnEstimate): New estimate, same shape
            weight (float): Weight in (0, 1]; values >= 1 replace zeta
        """
        if estimate.n_columns != self.n_columns or estimate.values.shape[0] != self.q:
            raise DimensionMismatch(f"estimate is {estimate.values.shape[0]}x{estimate.n_columns}, "
                                    f"tracker is {self.q}x{self.n_columns}")
        if weight >= 1.0:
            self._scaled[:] = 0.0
            self._scale = 1.0
            self._scaled[:, estimate.columns] = estimate.values
            return
        self._scale *= 1.0 - weight
        if self._scale < _RENORMALISE_BELOW:
            self._scaled *= self._scale
            self._scale = 1.0
        self._scaled[:, estimate.columns] += weight * estimate.values / self._scale

    def copy(self):
        other = ZetaTracker(self.q, self.n_columns)
        other._scaled = self._scaled.copy()
        other._scale = self._scale
        return other

    def is_finite(self):
        return bool(np.isfinite(self._scale) and np.all(np.isfinite(self._scaled)))

    def __repr__(self):
        return f"ZetaTracker(q={self.q}, n_columns={self.n_columns}, scale={self._scale:.3e})"


@dataclass(eq=False)
class CompGradientCtx:
    """
    Auxiliary variables of a compositional solver

    Attributes:
        zeta (ZetaTracker): Tracker of the inner expectation
        u (np.ndarray): Auxiliary iterate
        pool (SamplePool): Pool for index sampling, None in the memory-efficient form
    """

    zeta: ZetaTracker
    u: np.ndarray
    pool: object = None

    @property
    def me(self):
        return self.pool is None


def reparam_terms(kind, post, z, spec):
    """
    Inner values and their Jacobians for a stack of draws

    Args:
        kind (str): Acquisition kind
        post (BatchPosterior): Posterior with dmean and dchol
        z (np.ndarray): K x q draws
        spec (AcquisitionSpec): Constants

    Returns:
        tuple: v (K x q) and dv (K x q x dq)
    """
    lz = z @ post.chol.T
    dlz = np.einsum("ijs,kj->kis", post.dchol, z)
    if kind == "UCB":
        c = np.sqrt(spec.beta * np.pi / 2.0)
        v = post.mean + c * np.abs(lz)
        dv = post.dmean[None, :, :] + c * np.sign(lz)[:, :, None] * dlz
        return v, dv
    y = post.mean + lz
    dy = post.dmean[None, :, :] + dlz
    if kind == "EI":
        gap = y - spec.incumbent
        return np.maximum(gap, 0.0), dy * (gap > 0)[:, :, None]
    if kind == "PI":
        return (y - spec.incumbent) / spec.tau, dy / spec.tau
    if kind == "SR":
        return y, dy
    raise ValueError(f"Unknown acquisition kind: {kind}")


def grad_from_posterior(kind, post, z, spec):
    """
    Mean over draws of the gradient of max_j wrap(v)_j

    Args:
        kind (str): Acquisition kind
        post (BatchPosterior): Posterior with Jacobians
        z (np.ndarray): K x q draws
        spec (AcquisitionSpec): Constants

    Returns:
        AcqGradient: Gradient and estimate
    """
    z = np.atleast_2d(z)
    if z.shape[1] != post.q:
        raise DimensionMismatch(f"draws have {z.shape[1]} columns, batch size is {post.q}")
    v, dv = reparam_terms(kind, post, z, spec)
    wrapped = wrap(kind, v)
    rows = np.arange(z.shape[0])
    best = np.argmax(wrapped, axis=1)
    d_best = dv[rows, best]
    if kind == "PI":
        s = wrapped[rows, best]
        d_best = d_best * (s * (1.0 - s))[:, None]
    return AcqGradient(d_best.mean(axis=0), float(wrapped[rows, best].mean()))


def grad_fsm(kind, model, xq, pool_slice, spec):
    """
    Gradient of the FSM estimate over a slice of the pool

    Args:
        kind (str): Acquisition kind
        model (GpModel): Surrogate
        xq (np.ndarray): q x d batch
        pool_slice (np.ndarray): K x q pool rows
        spec (AcquisitionSpec): Constants

    Returns:
        AcqGradient: Gradient with respect to xq.ravel()
    """
    return grad_from_posterior(kind, posterior(model, xq, with_grads=True), pool_slice, spec)


def grad_erm(kind, model, xq, minibatch, rng, spec):
    """
    Gradient of the ERM estimate with fresh draws

    Args:
        kind (str): Acquisition kind
        model (GpModel): Surrogate
        xq (np.ndarray): q x d batch
        minibatch (int): Number of fresh draws
        rng (np.random.Generator): Caller-owned generator
        spec (AcquisitionSpec): Constants

    Returns:
        AcqGradient: Gradient with respect to xq.ravel()
    """
    if minibatch < 1:
        raise ValueError(f"minibatch must be at least 1, got {minibatch}")
    post = posterior(model, xq, with_grads=True)
    return grad_from_posterior(kind, post, draw_normals(rng, minibatch, post.q), spec)


def comp_grad_from_posterior(kind, post, ctx, k1, rng, spec, indices=None):
    """
    Compositional gradient J^T grad f(zeta) for a given posterior

    Args:
        kind (str): Acquisition kind
        post (BatchPosterior): Posterior with Jacobians
        ctx (CompGradientCtx): Tracked zeta and pool
        k1 (int): Minibatch size
        rng (np.random.Generator): Caller-owned generator
        spec (AcquisitionSpec): Constants
        indices (np.ndarray, optional): Fixed pool columns instead of sampled ones

    Returns:
        AcqGradient: Gradient and f(zeta)
    """
    zeta = ctx.zeta
    if zeta.q != post.q:
        raise DimensionMismatch(f"zeta tracks {zeta.q} rows, batch size is {post.q}")
    if ctx.me:
        if k1 != zeta.n_columns:
            raise DimensionMismatch(f"memory-efficient zeta has {zeta.n_columns} columns, k1 is {k1}")
        columns = np.arange(k1)
        z = draw_normals(rng, k1, post.q)
        pi_scale = 1.0
        value = outer_me(kind, zeta.dense())
    else:
        if zeta.n_columns != ctx.pool.m:
            raise DimensionMismatch(f"zeta has {zeta.n_columns} columns, pool has {ctx.pool.m}")
        columns = sample_indices(rng, ctx.pool.m, k1) if indices is None else np.asarray(indices)
        z = ctx.pool.z[columns]
        pi_scale = float(ctx.pool.m)
        value = outer_dense(kind, zeta.dense())

    _, dv = reparam_terms(kind, post, z, spec)
    tracked = zeta.values(columns)
    best = np.argmax(tracked, axis=0)
    picks = np.arange(columns.size)
    d_best = dv[picks, best]
    if kind == "PI":
        s = expit(pi_scale * tracked[best, picks])
        d_best = d_best * (s * (1.0 - s))[:, None]
    return AcqGradient(d_best.sum(axis=0) / columns.size, value)


def grad_comp(kind, model, xq, ctx, k1, rng, spec, indices=None):
    """
    Compositional gradient at a tracked zeta

    Samples K1 pool columns (or K1 fresh draws in the memory-efficient
    form), uses the argmax of each tracked zeta column and returns
    J^T grad f(zeta). zeta is used as tracked, not recomputed.

    Args:
        kind (str): Acquisition kind
        model (GpModel): Surrogate
        xq (np.ndarray): q x d batch
        ctx (CompGradientCtx): Auxiliary variables
        k1 (int): Minibatch size
        rng (np.random.Generator): Caller-owned generator
        spec (AcquisitionSpec): Constants
        indices (np.ndarray, optional): Fixed pool columns

    Returns:
        AcqGradient: Gradient with respect to xq.ravel()
    """
    return comp_grad_from_posterior(kind, posterior(model, xq, with_grads=True), ctx, k1, rng, spec, indices)
