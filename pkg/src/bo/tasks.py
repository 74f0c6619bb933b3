#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Synthetic benchmark tasks

Levy, Ackley, Powell, Dixon-Price and Styblinski-Tang on their usual
domains. Tasks are maximised, so evaluate returns the negated standard
value. Inputs are mapped affinely between the native box and [0, 1]^d.
"""

from dataclasses import dataclass

import numpy as np

from src.utils.constants import TASK_NAMES
from src.utils.errors import ConfigError, OutOfDomain

# Slack allowed when checking box membership
_BOX_TOL = 1e-12


def levy(x):
    w = 1.0 + (x - 1.0) / 4.0
    head = np.sin(np.pi * w[0]) ** 2
    body = np.sum((w[:-1] - 1.0) ** 2 * (1.0 + 10.0 * np.sin(np.pi * w[:-1] + 1.0) ** 2))
    tail = (w[-1] - 1.0) ** 2 * (1.0 + np.sin(2.0 * np.pi * w[-1]) ** 2)
    return head + body + tail


def ackley(x, a=20.0, b=0.2, c=2.0 * np.pi):
    return (-a * np.exp(-b * np.sqrt(np.mean(x ** 2)))
            - np.exp(np.mean(np.cos(c * x))) + a + np.e)


def powell(x):
    blocks = x.reshape(-1, 4)
    x1, x2, x3, x4 = blocks.T
    return float(np.sum((x1 + 10.0 * x2) ** 2 + 5.0 * (x3 - x4) ** 2
                        + (x2 - 2.0 * x3) ** 4 + 10.0 * (x1 - x4) ** 4))


def dixon_price(x):
    i = np.arange(2, x.shape[0] + 1)
    return (x[0] - 1.0) ** 2 + np.sum(i * (2.0 * x[1:] ** 2 - x[:-1]) ** 2)


def styblinski_tang(x):
    return 0.5 * np.sum(x ** 4 - 16.0 * x ** 2 + 5.0 * x)


def styblinski_tang_minimiser():
    """Smallest real root of 4x^3 - 32x + 5, the per-coordinate minimiser"""
    roots = np.roots([4.0, 0.0, -32.0, 5.0])
    return float(np.min(roots[np.abs(roots.imag) < 1e-12].real))


def dixon_price_minimiser(dim):
    i = np.arange(1, dim + 1)
    return 2.0 ** (-(2.0 ** i - 2.0) / 2.0 ** i)


# name -> (function, lower, upper)
_DEFINITIONS = {
    "levy": (levy, -10.0, 10.0),
    "ackley": (ackley, -32.768, 32.768),
    "powell": (powell, -4.0, 5.0),
    "dixon_price": (dixon_price, -10.0, 10.0),
    "styblinski_tang": (styblinski_tang, -5.0, 5.0),
}


def _optimum_point(name, dim):
    if name == "levy":
        return np.ones(dim)
    if name in ("ackley", "powell"):
        return np.zeros(dim)
    if name == "dixon_price":
        return dixon_price_minimiser(dim)
    return np.full(dim, styblinski_tang_minimiser())


@dataclass(frozen=True, eq=False)
class SyntheticTask:
    """
    Black-box function on a box

    Attributes:
        name (str): Task id
        dim (int): Input dimension d
        lower (np.ndarray): Lower corner of the native domain
        upper (np.ndarray): Upper corner of the native domain
        optimum_value (float): Maximum of evaluate
        optimum_point (np.ndarray): Maximiser in the native domain
    """

    name: str
    dim: int
    lower: np.ndarray
    upper: np.ndarray
    optimum_value: float
    optimum_point: np.ndarray

    def __post_init__(self):
        if not np.all(self.lower < self.upper):
            raise ValueError(f"{self.name}: lower bound must be below upper bound")

    def evaluate(self, x_native):
        """
        Negated standard value at a native point

        Args:
            x_native (np.ndarray): d-vector inside [lower, upper]

        Returns:
            float: -f(x)

        Raises:
            OutOfDomain: If the point lies outside the domain
        """
        x = self._check(x_native, self.lower, self.upper, "native domain")
        return -float(_DEFINITIONS[self.name][0](x))

    def to_unit(self, x_native):
        """Affine map from the native box to [0, 1]^d"""
        x = self._check(x_native, self.lower, self.upper, "native domain")
        return (x - self.lower) / (self.upper - self.lower)

    def from_unit(self, x_unit):
        """Affine map from [0, 1]^d to the native box"""
        u = self._check(x_unit, 0.0, 1.0, "unit box")
        return self.lower + u * (self.upper - self.lower)

    def evaluate_unit(self, x_unit):
        """Negated value at a point given in unit coordinates"""
        return self.evaluate(self.from_unit(x_unit))

    def _check(self, x, lower, upper, where):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise OutOfDomain(f"{self.name}: expected a {self.dim}-vector, got shape {x.shape}")
        if np.any(x < lower - _BOX_TOL) or np.any(x > upper + _BOX_TOL) or not np.all(np.isfinite(x)):
            raise OutOfDomain(f"{self.name}: point {x} lies outside the {where}")
        return np.clip(x, lower, upper)

    def __repr__(self):
        return f"SyntheticTask(name={self.name!r}, dim={self.dim}, optimum_value={self.optimum_value:.6g})"


def make_task(name, dim):
    """
    Look up a task by name

    Args:
        name (str): One of TASK_NAMES
        dim (int): Input dimension

    Returns:
        SyntheticTask: The task

    Raises:
        ConfigError: For unknown names or unsupported dimensions
    """
    if name not in _DEFINITIONS:
        raise ConfigError(f"Unknown task: {name} (available: {', '.join(TASK_NAMES)})")
    if dim < 1:
        raise ConfigError(f"{name} needs a positive dimension, got {dim}")
    if name == "powell" and dim % 4:
        raise ConfigError(f"powell needs a dimension divisible by 4, got {dim}")
    function, lo, hi = _DEFINITIONS[name]
    point = _optimum_point(name, dim)
    return SyntheticTask(name, dim, np.full(dim, lo), np.full(dim, hi),
                         -float(function(point)), point)


@dataclass(frozen=True)
class RegretRow:
    """
    Normalised immediate regret at one step

    Attributes:
        step (int): Step index t, 0 for the initial design
        incumbent (float): Best observed value f(x_t)
        regret (float): |f(x_t) - f*| / |f(x_0) - f*|
    """

    step: int
    incumbent: float
    regret: float


def normalised_regret(incumbents, task):
    """
    Regret of an incumbent sequence relative to the first entry

    Args:
        incumbents (sequence): Incumbent values, initial design first
        task (SyntheticTask): Task with a known optimum

    Returns:
        list: RegretRow per step; all zeros when the first incumbent is optimal
    """
    values = [float(v) for v in incumbents]
    if not values:
        raise ValueError("regret needs at least one incumbent")
    initial_gap = abs(values[0] - task.optimum_value)
    rows = []
    for t, value in enumerate(values):
        regret = 0.0 if initial_gap == 0 else abs(value - task.optimum_value) / initial_gap
        rows.append(RegretRow(t, value, regret))
    return rows
