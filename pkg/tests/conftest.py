#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Shared test fixtures

Small seeded datasets, conditioned toy GPs and sample pools.
"""

import numpy as np
import pytest

from src.acquisition.functions import SamplePool, ledger
from src.surrogate.gp import Dataset, GpModel
from src.surrogate.kernel import KernelParams


def smooth_function(x):
    """Smooth test surface on the unit box"""
    return np.sin(3.0 * x[:, 0]) + np.cos(2.0 * x[:, -1]) - 0.5 * np.sum((x - 0.4) ** 2, axis=1)


def make_dataset(n, d, seed):
    rng = np.random.default_rng(seed)
    x = rng.random((n, d))
    return Dataset.from_raw(x, smooth_function(x))


def make_model(n=8, d=2, seed=0, noise=1e-4):
    dataset = make_dataset(n, d, seed)
    params = KernelParams(np.linspace(0.3, 0.6, d), 1.0, noise)
    return GpModel.build(dataset, params)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def dataset():
    return make_dataset(10, 2, seed=3)


@pytest.fixture
def model():
    return make_model(n=8, d=2, seed=0)


@pytest.fixture
def pool():
    return SamplePool.draw(64, 3, seed=7)


@pytest.fixture
def fresh_ledger():
    ledger.reset()
    yield ledger
    ledger.reset()
