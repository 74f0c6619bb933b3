#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Matern 5/2 kernel

ARD Matern 5/2 covariance with its input gradient and the gradients of
the Gram matrix with respect to the log-hyperparameters.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

import config

SQRT5 = np.sqrt(5.0)


@dataclass(frozen=True, eq=False)
class KernelParams:
    """
    Kernel hyperparameters

    Attributes:
        lengthscales (np.ndarray): One positive lengthscale per input dimension
        signal_variance (float): Positive signal variance s^2
        noise_variance (float): Positive observation noise sigma^2
    """

    lengthscales: np.ndarray
    signal_variance: float
    noise_variance: float

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        object.__setattr__(self, "lengthscales", ls)
        if np.any(ls <= 0) or self.signal_variance <= 0 or self.noise_variance <= 0:
            raise ValueError(f"kernel parameters must be positive, got {self}")

    @property
    def dim(self):
        return self.lengthscales.shape[0]

    def to_log(self):
        """Return [log lengthscales..., log signal, log noise]"""
        return np.concatenate([np.log(self.lengthscales),
                               [np.log(self.signal_variance), np.log(self.noise_variance)]])

    @classmethod
    def from_log(cls, theta):
        """Build parameters from a log vector laid out as in to_log"""
        theta = np.asarray(theta, dtype=float)
        return cls(np.exp(theta[:-2]), float(np.exp(theta[-2])), float(np.exp(theta[-1])))

    @classmethod
    def default(cls, dim):
        """Starting point used for the first fit of a run"""
        return cls(np.full(dim, config.INIT_LENGTHSCALE), config.INIT_SIGNAL, config.INIT_NOISE)

    @staticmethod
    def log_bounds(dim):
        """
        Box bounds of the log vector

        Returns:
            tuple: (lower, upper) arrays of length dim + 2
        """
        lo = [np.log(config.LENGTHSCALE_BOUNDS[0])] * dim + [np.log(config.SIGNAL_BOUNDS[0]),
                                                             np.log(config.NOISE_BOUNDS[0])]
        hi = [np.log(config.LENGTHSCALE_BOUNDS[1])] * dim + [np.log(config.SIGNAL_BOUNDS[1]),
                                                             np.log(config.NOISE_BOUNDS[1])]
        return np.array(lo), np.array(hi)

    def __repr__(self):
        ls = np.array2string(self.lengthscales, precision=4)
        return (f"KernelParams(lengthscales={ls}, signal_variance={self.signal_variance:.4g}, "
                f"noise_variance={self.noise_variance:.4g})")


def _profile(r, signal_variance):
    return signal_variance * (1.0 + SQRT5 * r + 5.0 / 3.0 * r ** 2) * np.exp(-SQRT5 * r)


def matern52(x1, x2, params):
    """
    Matern 5/2 covariance of two points

    Args:
        x1 (np.ndarray): d-vector
        x2 (np.ndarray): d-vector
        params (KernelParams): Hyperparameters

    Returns:
        float: s^2 exp(-sqrt5 r)(1 + sqrt5 r + 5/3 r^2)
    """
    r = np.sqrt(np.sum(((np.asarray(x1) - np.asarray(x2)) / params.lengthscales) ** 2))
    return float(_profile(r, params.signal_variance))


def matern52_grad_x1(x1, x2, params):
    """
    Gradient of matern52 with respect to its first argument

    Args:
        x1 (np.ndarray): d-vector
        x2 (np.ndarray): d-vector
        params (KernelParams): Hyperparameters

    Returns:
        np.ndarray: d-vector, zero when x1 == x2
    """
    diff = np.asarray(x1, dtype=float) - np.asarray(x2, dtype=float)
    r = np.sqrt(np.sum((diff / params.lengthscales) ** 2))
    scale = -5.0 / 3.0 * params.signal_variance * (1.0 + SQRT5 * r) * np.exp(-SQRT5 * r)
    return scale * diff / params.lengthscales ** 2


def scaled_distance(xa, xb, params):
    """Matrix of scaled Euclidean distances between the rows of xa and xb"""
    if xa.shape[0] == 0 or xb.shape[0] == 0:
        return np.zeros((xa.shape[0], xb.shape[0]))
    return cdist(xa / params.lengthscales, xb / params.lengthscales)


def gram(xa, xb, params):
    """
    Cross-covariance matrix k(xa_i, xb_j)

    Args:
        xa (np.ndarray): n x d
        xb (np.ndarray): m x d
        params (KernelParams): Hyperparameters

    Returns:
        np.ndarray: n x m
    """
    return _profile(scaled_distance(xa, xb, params), params.signal_variance)


def gram_grad_x(xq, xb, params):
    """
    Gradients of k(xq_p, xb_i) with respect to xq_p

    Args:
        xq (np.ndarray): q x d query points
        xb (np.ndarray): n x d points
        params (KernelParams): Hyperparameters

    Returns:
        np.ndarray: q x n x d array of kernel gradients
    """
    diff = xq[:, None, :] - xb[None, :, :]
    r = scaled_distance(xq, xb, params)
    scale = -5.0 / 3.0 * params.signal_variance * (1.0 + SQRT5 * r) * np.exp(-SQRT5 * r)
    return scale[:, :, None] * diff / params.lengthscales ** 2


def gram_grad_log_params(x, params):
    """
    Derivatives of the regularised Gram matrix C = K + sigma^2 I

    Args:
        x (np.ndarray): n x d inputs
        params (KernelParams): Hyperparameters

    Returns:
        np.ndarray: (d + 2) x n x n, one slice per entry of params.to_log()
    """
    n, d = x.shape
    r = scaled_distance(x, x, params)
    decay = np.exp(-SQRT5 * r)
    grads = np.empty((d + 2, n, n))
    common = 5.0 / 3.0 * params.signal_variance * (1.0 + SQRT5 * r) * decay
    for k in range(d):
        sq = ((x[:, None, k] - x[None, :, k]) / params.lengthscales[k]) ** 2
        grads[k] = common * sq
    grads[d] = _profile(r, params.signal_variance)
    grads[d + 1] = params.noise_variance * np.eye(n)
    return grads
