#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Dense linear algebra

Cholesky factorisation with a jitter ladder, triangular solves,
log-determinants and the directional derivative of a Cholesky factor.
"""

import logging

import numpy as np
from scipy import linalg as sla

import config
from src.utils.errors import DimensionMismatch, NotPositiveDefinite

logger = logging.getLogger(__name__)


def jitter_ladder(jitter, levels=config.JITTER_LEVELS):
    """
    Jitter values tried by cholesky, in order

    Args:
        jitter (float): Base jitter
        levels (int): Number of non-zero levels

    Returns:
        list: [0, jitter, 10*jitter, ...]
    """
    return [0.0] + [jitter * 10.0 ** k for k in range(levels)]


def cholesky(a, jitter=config.CHOLESKY_JITTER, relative=True):
    """
    Lower Cholesky factor of a + j*I for the smallest working j

    Args:
        a (np.ndarray): Symmetric n x n matrix
        jitter (float): Base jitter (>= 0)
        relative (bool): Scale jitter by the mean diagonal of a

    Returns:
        tuple: (L, j) with L lower triangular and j the jitter actually added

    Raises:
        NotPositiveDefinite: If no level of the ladder succeeds
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"cholesky needs a square matrix, got shape {a.shape}")
    if jitter < 0:
        raise ValueError(f"jitter must be non-negative, got {jitter}")
    n = a.shape[0]
    if n == 0:
        return np.zeros((0, 0)), 0.0
    if not np.all(np.isfinite(a)):
        raise NotPositiveDefinite("matrix has non-finite entries")

    scale = 1.0
    if relative:
        mean_diag = float(np.mean(np.diag(a)))
        if mean_diag > 0:
            scale = mean_diag
    eye = np.eye(n)
    levels = jitter_ladder(jitter) if jitter > 0 else [0.0]
    for level in levels:
        j = level * scale
        try:
            factor = sla.cholesky(a + j * eye, lower=True, check_finite=False)
        except sla.LinAlgError:
            continue
        if np.all(np.diag(factor) > 0):
            if j > 0:
                logger.debug("cholesky needed jitter %.3e (n=%d)", j, n)
            return factor, j
    raise NotPositiveDefinite(f"no jitter level up to {jitter * 1e6:.1e} made the {n}x{n} matrix positive definite")


def solve_lower(l, b):
    """
    Solve l @ x = b by forward substitution

    Args:
        l (np.ndarray): Lower-triangular n x n factor
        b (np.ndarray): Right-hand side, n or n x k

    Returns:
        np.ndarray: Solution with the shape of b
    """
    if l.shape[0] != np.shape(b)[0]:
        raise DimensionMismatch(f"factor is {l.shape}, right-hand side is {np.shape(b)}")
    return sla.solve_triangular(l, b, lower=True, check_finite=False)


def solve_upper_t(l, b):
    """Solve l.T @ x = b for a lower-triangular l"""
    if l.shape[0] != np.shape(b)[0]:
        raise DimensionMismatch(f"factor is {l.shape}, right-hand side is {np.shape(b)}")
    return sla.solve_triangular(l, b, lower=True, trans="T", check_finite=False)


def chol_solve(l, b):
    """Solve (l @ l.T) x = b"""
    return solve_upper_t(l, solve_lower(l, b))


def logdet_from_chol(l):
    """
    Log-determinant of l @ l.T

    Args:
        l (np.ndarray): Cholesky factor

    Returns:
        float: 2 * sum(log(diag(l)))
    """
    return 2.0 * float(np.sum(np.log(np.diag(l))))


def _phi(a):
    """Strict lower triangle plus half the diagonal, over the last two axes"""
    out = np.tril(a, k=-1)
    idx = np.arange(a.shape[-1])
    out[..., idx, idx] = 0.5 * a[..., idx, idx]
    return out


def chol_pushforward(l, d_sigma):
    """
    Directional derivative of the Cholesky factor

    For Sigma = L L^T and a symmetric perturbation dSigma returns
    dL = L Phi(L^-1 dSigma L^-T). Accepts a single n x n perturbation or a
    stack of shape (k, n, n) and then returns a stack.

    Args:
        l (np.ndarray): Lower Cholesky factor of Sigma
        d_sigma (np.ndarray): Symmetric perturbation(s)

    Returns:
        np.ndarray: dL with the shape of d_sigma
    """
    n = l.shape[0]
    if d_sigma.shape[-2:] != (n, n):
        raise DimensionMismatch(f"factor is {l.shape}, perturbation is {d_sigma.shape}")
    if np.any(np.diag(l) <= 0):
        raise NotPositiveDefinite("factor has a non-positive diagonal")
    l_inv = sla.solve_triangular(l, np.eye(n), lower=True, check_finite=False)
    inner = l_inv @ d_sigma @ l_inv.T
    return l @ _phi(inner)
