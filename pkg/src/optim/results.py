#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Restart bookkeeping shared by the acquisition maximisers
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from src.acquisition.functions import acq_fsm, draw_normals, inner_values, max_average
from src.surrogate.gp import posterior
from src.utils.errors import NonFiniteGradient, NonFiniteState, NotPositiveDefinite

logger = logging.getLogger(__name__)

# Failures that drop a single restart instead of the whole maximisation
RESTART_FAILURES = (NotPositiveDefinite, NonFiniteGradient, NonFiniteState, FloatingPointError)


@dataclass
class MaximisationResult:
    """
    Best batch found by an acquisition maximiser

    Attributes:
        x (np.ndarray): q x d batch
        value (float): Acquisition value used for selection
        restart_values (list): Selection value of every surviving restart
        dropped (int): Restarts dropped after a numerical failure
    """

    x: np.ndarray
    value: float
    restart_values: list = field(default_factory=list)
    dropped: int = 0


def selection_scorer(model, spec, pool, rng, samples, q):
    """
    Build the function that ranks final batches

    FSM and compositional forms are ranked by acq_fsm on the full pool.
    ERM is ranked on one large set of fresh draws shared by all restarts.

    Args:
        model (GpModel): Surrogate
        spec (AcquisitionSpec): Acquisition
        pool (SamplePool): Pool of the current step, unused for ERM
        rng (np.random.Generator): Generator for the ERM draws
        samples (int): Number of ERM selection draws
        q (int): Batch size

    Returns:
        callable: q x d batch -> float
    """
    if spec.form == "ERM" or pool is None:
        z = draw_normals(rng, samples, q)

        def score_erm(xq):
            return max_average(spec.kind, inner_values(spec.kind, posterior(model, xq), z, spec))

        return score_erm

    def score_fsm(xq):
        return acq_fsm(spec.kind, posterior(model, xq), pool, spec)

    return score_fsm


def run_restarts(x0_batches, optimise_one, score):
    """
    Optimise every restart and keep the best final batch

    Args:
        x0_batches (list): Starting q x d batches
        optimise_one (callable): (index, x0) -> final q x d batch
        score (callable): q x d batch -> float

    Returns:
        MaximisationResult: Best surviving batch

    Raises:
        BenchError: If every restart failed
    """
    if len(x0_batches) == 0:
        raise ValueError("at least one restart batch is required")
    best_x, best_value, values, dropped = None, -np.inf, [], 0
    last_error = None
    for k, x0 in enumerate(x0_batches):
        try:
            final = optimise_one(k, np.asarray(x0, dtype=float))
            value = float(score(final))
        except RESTART_FAILURES as exc:
            logger.debug("restart %d dropped: %s", k, exc)
            dropped += 1
            last_error = exc
            continue
        if not np.isfinite(value):
            logger.debug("restart %d dropped: non-finite acquisition value", k)
            dropped += 1
            continue
        values.append(value)
        if best_x is None or value > best_value:
            best_x, best_value = final, value
    if best_x is None:
        raise NonFiniteState(f"all {len(x0_batches)} restarts failed") from last_error
    return MaximisationResult(best_x, best_value, values, dropped)

