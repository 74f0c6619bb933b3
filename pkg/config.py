#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Benchmark configuration file

Global defaults for the surrogate, the acquisition functions, the
optimisers and the benchmark runner. Experiment files and command-line
flags override these values.
"""

import os

# Basic settings
PROJECT_NAME = "compobo"
VERSION = "1.0.0"
DEBUG_MODE = os.environ.get("BO_BENCH_DEBUG", "0") == "1"

# BO protocol
BATCH_SIZE = 16  # q
N_STEPS = 32  # acquisition steps N
T_OPT = 64  # inner optimiser steps T
MINIBATCH = 128  # m
N_RAW = 1024  # raw restart batches
N_RESTARTS = 32  # selected restart batches
N_INIT = 3  # initial uniform design
RESTART_STRATEGY = "boltzmann"  # "boltzmann" or "topk"

# Acquisition settings
POOL_SIZE = 512  # M
PI_TAU = 0.05
UCB_BETA = 2.0
ERM_SELECTION_SAMPLES = 2048  # fresh draws used to rank ERM restarts

# Compositional minibatches
K1 = 128
K2 = 128

# GP surrogate
CHOLESKY_JITTER = 1e-6  # relative to the mean diagonal
JITTER_LEVELS = 7  # 0, jitter, 10*jitter, ..., 1e6*jitter
LENGTHSCALE_BOUNDS = (1e-3, 1e3)
SIGNAL_BOUNDS = (1e-3, 1e3)
NOISE_BOUNDS = (1e-8, 1.0)
GAMMA_PRIOR_SHAPE = 3.0
GAMMA_PRIOR_RATE = 6.0
GP_FIT_RESTARTS = 5
GP_FIT_STEPS = 50
INIT_LENGTHSCALE = 0.5
INIT_SIGNAL = 1.0
INIT_NOISE = 1e-3

# L-BFGS
LBFGS_HISTORY = 10
ARMIJO_C = 1e-4
MAX_HALVINGS = 20
CURVATURE_EPS = 1e-10

# Zero-order optimisers
RS_BUDGET_FACTOR = 32  # budget = factor * T * m
CMA_INIT_STEP = 0.3
CMA_PATH_THRESHOLD = 1.5
DE_POPULATION = 32
DE_F_SCALE = 0.7
DE_P_MUTATION = 0.9

# First-order defaults (centres of the tuning domains)
LR_DECAY_GAMMA = 0.97
FIRST_ORDER_DEFAULTS = {
    "sga": {"lr": 1.73e-3, "momentum": 0.5, "dampening": 0.5, "nesterov": False,
            "weight_decay": 0.0, "gamma": LR_DECAY_GAMMA},
    "adagrad": {"lr": 1.73e-3, "lr_decay": 1e-3, "eps": 5.5e-5, "weight_decay": 0.0},
    # alpha: smoothing constant, v <- alpha * v + (1 - alpha) * g^2
    "rmsprop": {"lr": 1.73e-3, "momentum": 0.5, "alpha": 5.5e-4, "centered": False,
                "eps": 1e-8, "weight_decay": 0.0, "gamma": LR_DECAY_GAMMA},
    "adam": {"lr": 1.73e-3, "beta1": 0.5245, "beta2": 0.9487, "eps": 1e-8,
             "weight_decay": 0.0, "gamma": LR_DECAY_GAMMA},
    "adadelta": {"lr": 1.73e-3, "rho": 0.5, "eps": 1e-6, "weight_decay": 0.0,
                 "gamma": LR_DECAY_GAMMA},
    "rprop": {"lr": 1.73e-3, "eta_minus": 0.5, "eta_plus": 2.0, "step_min": 1e-6,
              "step_max": 50.0, "gamma": LR_DECAY_GAMMA},
    "adamw": {"lr": 1.73e-3, "beta1": 0.5245, "beta2": 0.9487, "eps": 1e-8,
              "weight_decay": 3.16e-5, "gamma": LR_DECAY_GAMMA},
    "adamos": {"lr": 3.16e-3, "beta1": 0.9, "mu": 0.99, "c_gamma": 0.75, "alpha_d": 0.26,
               "mu_d": 1.0, "gamma2_d": 0.5, "eps": 1e-8},
}

# Compositional defaults
COMP_DEFAULTS = {
    "scga": {"lr": 3.16e-2, "lr_decay": 0.75, "beta": 0.316, "beta_decay": 0.5},
    "ascga": {"lr": 3.16e-2, "lr_decay": 0.75, "beta": 0.316, "beta_decay": 0.5},
    "cadam": {"lr": 3.16e-3, "beta": 0.0316, "beta1": 0.9, "mu": 0.99, "c_gamma": 0.75,
              "alpha_d": 0.26, "mu_d": 1.0, "gamma2_d": 0.5, "eps": 1e-8},
    "nasa": {"a": 1.0, "b": 1.0, "beta": 1.0, "gamma": 0.75},
    "nested_mc": dict(FIRST_ORDER_DEFAULTS["adam"]),
}

# Runner settings
DEFAULT_SEEDS = (0, 1, 2, 3, 4)
DEFAULT_JOBS = int(os.environ.get("BO_BENCH_JOBS", "1"))
OUTPUT_DIR = os.environ.get("BO_BENCH_OUT", "out/")
CSV_NAME = "runs.csv"
SUMMARY_NAME = "summary.json"
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
