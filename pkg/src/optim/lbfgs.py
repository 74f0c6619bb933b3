#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Limited-memory BFGS

Two-loop recursion, curvature-pair bookkeeping and a projected
backtracking line search, written for maximisation over a box. Used by
the GP fit and by the acquisition maximisers in second_order.
"""

import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np

import config
from src.utils.errors import LineSearchFailed

logger = logging.getLogger(__name__)


@dataclass
class CurvaturePair:
    """
    Iterate and gradient differences of one accepted step

    Attributes:
        s (np.ndarray): x_{t+1} - x_t
        h (np.ndarray): Difference of descent gradients, -(g_{t+1} - g_t)
        rho (float): 1 / (h . s)
    """

    s: np.ndarray
    h: np.ndarray
    rho: float


@dataclass
class LbfgsState:
    """
    Iterate and bounded curvature history

    Attributes:
        x (np.ndarray): Current iterate
        pairs (deque): Most recent CurvaturePair objects, newest last
        prev_grad (np.ndarray): Gradient at x
        t (int): Accepted steps so far
    """

    x: np.ndarray
    pairs: deque = field(default_factory=lambda: deque(maxlen=config.LBFGS_HISTORY))
    prev_grad: np.ndarray = None
    t: int = 0

    @classmethod
    def start(cls, x0, grad=None, history=config.LBFGS_HISTORY):
        return cls(x=np.array(x0, dtype=float), pairs=deque(maxlen=history),
                   prev_grad=None if grad is None else np.array(grad, dtype=float))


@dataclass
class LbfgsResult:
    """
    Outcome of an L-BFGS run

    Attributes:
        x (np.ndarray): Best point visited
        value (float): Objective at x
        values (list): Objective after every accepted step, starting value first
        iterates (list): Accepted iterates, x0 first
        status (str): "converged", "max_steps", "line_search_failed" or "failed"
    """

    x: np.ndarray
    value: float
    values: list
    iterates: list
    status: str


def update_pairs(state, s, h, eps=config.CURVATURE_EPS):
    """
    Store (s, h) if it satisfies the curvature condition

    Args:
        state (LbfgsState): State to update in place
        s (np.ndarray): Iterate difference
        h (np.ndarray): Descent-gradient difference
        eps (float): Minimum accepted h . s

    Returns:
        bool: True if the pair was stored
    """
    hs = float(np.dot(h, s))
    if not np.isfinite(hs) or hs <= eps:
        logger.debug("curvature pair rejected (h.s = %.3e)", hs)
        return False
    state.pairs.append(CurvaturePair(s=np.array(s, dtype=float), h=np.array(h, dtype=float), rho=1.0 / hs))
    return True


def lbfgs_direction(state, grad):
    """
    Ascent direction A_t @ grad from the stored pairs

    A_0 = (s.h / h.h) I for the newest pair, or I without pairs.

    Args:
        state (LbfgsState): Curvature history
        grad (np.ndarray): Gradient of the maximised objective

    Returns:
        np.ndarray: Search direction
    """
    q = np.array(grad, dtype=float)
    if not state.pairs:
        return q
    alphas = []
    for pair in reversed(state.pairs):
        a = pair.rho * np.dot(pair.s, q)
        q -= a * pair.h
        alphas.append(a)
    newest = state.pairs[-1]
    r = (np.dot(newest.s, newest.h) / np.dot(newest.h, newest.h)) * q
    for pair, a in zip(state.pairs, reversed(alphas)):
        b = pair.rho * np.dot(pair.h, r)
        r += pair.s * (a - b)
    return r


def backtrack(fun, x, value, grad, direction, lower, upper,
              armijo_c=config.ARMIJO_C, max_halvings=config.MAX_HALVINGS):
    """
    Projected backtracking line search with the Armijo condition

    Args:
        fun (callable): x -> (value, grad)
        x (np.ndarray): Current point
        value (float): Objective at x
        grad (np.ndarray): Gradient at x
        direction (np.ndarray): Ascent direction
        lower, upper: Box bounds
        armijo_c (float): Sufficient-increase constant
        max_halvings (int): Maximum number of step halvings

    Returns:
        tuple: (x_new, value_new, grad_new)

    Raises:
        LineSearchFailed: If no step length satisfies the condition
    """
    step = 1.0
    for _ in range(max_halvings + 1):
        x_new = np.clip(x + step * direction, lower, upper)
        s = x_new - x
        if not np.any(s):
            break
        value_new, grad_new = fun(x_new)
        if np.isfinite(value_new) and value_new >= value + armijo_c * np.dot(grad, s):
            return x_new, value_new, grad_new
        step *= 0.5
    raise LineSearchFailed(f"no Armijo step after {max_halvings} halvings")


def lbfgs_run(fun, x0, t_steps, lower=0.0, upper=1.0, history=config.LBFGS_HISTORY,
              armijo_c=config.ARMIJO_C, max_halvings=config.MAX_HALVINGS):
    """
    Maximise a smooth objective over a box

    Args:
        fun (callable): x -> (value, grad); value may be -inf where undefined
        x0 (np.ndarray): Starting point
        t_steps (int): Maximum number of accepted steps
        lower, upper: Box bounds (scalars or arrays)
        history (int): Number of curvature pairs kept
        armijo_c (float): Armijo constant
        max_halvings (int): Line-search halvings

    Returns:
        LbfgsResult: Best point and value, with the accepted trajectory
    """
    x = np.clip(np.array(x0, dtype=float), lower, upper)
    value, grad = fun(x)
    if not np.isfinite(value) or not np.all(np.isfinite(grad)):
        return LbfgsResult(x=x, value=float(value), values=[float(value)], iterates=[x], status="failed")

    state = LbfgsState.start(x, grad, history)
    values, iterates = [float(value)], [x.copy()]
    status = "max_steps"
    for _ in range(t_steps):
        if not np.any(grad):
            status = "converged"
            break
        direction = lbfgs_direction(state, grad)
        if np.dot(direction, grad) <= 0:
            state.pairs.clear()
            direction = np.array(grad, dtype=float)
        try:
            x_new, value_new, grad_new = backtrack(fun, x, value, grad, direction, lower, upper,
                                                   armijo_c, max_halvings)
        except LineSearchFailed as exc:
            logger.debug("L-BFGS stopped at step %d: %s", state.t, exc)
            status = "line_search_failed"
            break
        if not np.all(np.isfinite(grad_new)):
            status = "failed"
            break
        update_pairs(state, x_new - x, -(grad_new - grad))
        x, value, grad = x_new, value_new, grad_new
        state.x, state.prev_grad, state.t = x, grad, state.t + 1
        values.append(float(value))
        iterates.append(x.copy())

    best = int(np.argmax(values))
    return LbfgsResult(x=iterates[best], value=values[best], values=values, iterates=iterates, status=status)
