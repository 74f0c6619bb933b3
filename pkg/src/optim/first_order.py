#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
First-order acquisition maximisers

One general ascent update x <- delta_t x + eta_t phi1 / phi2 with eight
instantiations: SGA, AdaGrad, RMSprop, Adam, AdaDelta, RProp, AdamW and
AdamOS. Iterates are projected onto the unit box after every step.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np

import config
from src.acquisition.functions import sample_indices
from src.acquisition.gradients import grad_erm, grad_fsm
from src.optim.results import run_restarts, selection_scorer
from src.utils.errors import ConfigError, NonFiniteGradient
from src.utils.helpers import clip_unit

logger = logging.getLogger(__name__)

FIRST_ORDER_ALGOS = tuple(config.FIRST_ORDER_DEFAULTS)


def resolve_params(defaults, algo, overrides=None):
    """
    Merge per-algorithm defaults with user overrides

    Args:
        defaults (dict): Mapping algo -> default hyperparameters
        algo (str): Algorithm id
        overrides (dict, optional): Values to replace

    Returns:
        dict: Complete hyperparameters

    Raises:
        ConfigError: For an unknown algorithm or hyperparameter name
    """
    if algo not in defaults:
        raise ConfigError(f"Unknown optimiser: {algo}")
    params = dict(defaults[algo])
    for key, value in (overrides or {}).items():
        if key not in params:
            raise ConfigError(f"{algo} has no hyperparameter '{key}' (known: {sorted(params)})")
        params[key] = value
    return params


@dataclass
class FirstOrderState:
    """
    Iterate and accumulators of a first-order method

    Attributes:
        x (np.ndarray): Flattened batch in [0, 1]^{dq}
        m1 (np.ndarray): First accumulator (momentum or first moment)
        m2 (np.ndarray): Second accumulator (squared-gradient average or sum)
        aux (np.ndarray): AdaDelta update average, RProp step sizes, centred RMSprop mean
        prev_grad (np.ndarray): Previous gradient (RProp)
        t (int): Steps taken
        algo (str): Algorithm id
        params (dict): Hyperparameters
    """

    x: np.ndarray
    m1: np.ndarray
    m2: np.ndarray
    aux: np.ndarray
    prev_grad: np.ndarray
    t: int = 0
    algo: str = "adam"
    params: dict = field(default_factory=dict)

    @classmethod
    def start(cls, x0, algo, params=None):
        """
        Fresh state at x0

        Args:
            x0 (np.ndarray): Starting point (any shape, flattened)
            algo (str): Algorithm id
            params (dict, optional): Hyperparameter overrides

        Returns:
            FirstOrderState: State with zero accumulators
        """
        full = resolve_params(config.FIRST_ORDER_DEFAULTS, algo, params)
        x = clip_unit(np.asarray(x0, dtype=float).ravel())
        zeros = np.zeros_like(x)
        aux = np.full_like(x, full["lr"]) if algo == "rprop" else zeros.copy()
        return cls(x, zeros.copy(), zeros.copy(), aux, zeros.copy(), 0, algo, full)


def scheduled_lr(params, t):
    """lr * gamma^(t-1); gamma absent or 1 means a constant rate"""
    return params["lr"] * params.get("gamma", 1.0) ** (t - 1)


def adam_moments(m1, m2, grad, beta1, beta2):
    """Exponential moving averages of the gradient and its square"""
    return beta1 * m1 + (1.0 - beta1) * grad, beta2 * m2 + (1.0 - beta2) * grad ** 2


def cadam_schedule(t, params):
    """
    Time-varying moment weights and step size shared by AdamOS and CAdam

    beta1_t = beta1 mu^(mu_d t); beta2_t = 1 - c_gamma (1 - beta1_t)^2 / t^gamma2_d;
    eta_t = lr sqrt(1 - beta2_t) / ((1 - beta1_t) t^alpha_d).

    Args:
        t (int): Step number, from 1
        params (dict): Hyperparameters with lr, beta1, mu, c_gamma, alpha_d, mu_d, gamma2_d

    Returns:
        tuple: (beta1_t, beta2_t, eta_t)
    """
    beta1_t = params["beta1"] * params["mu"] ** (params["mu_d"] * t)
    beta2_t = 1.0 - params["c_gamma"] * (1.0 - beta1_t) ** 2 / t ** params["gamma2_d"]
    eta_t = params["lr"] * np.sqrt(1.0 - beta2_t) / ((1.0 - beta1_t) * t ** params["alpha_d"])
    return beta1_t, beta2_t, eta_t


def _safe_ratio(num, den):
    return np.divide(num, den, out=np.zeros_like(num), where=den > 0)


def general_step(state, grad, algo=None):
    """
    One ascent step of the general first-order update

    Args:
        state (FirstOrderState): Current state
        grad (np.ndarray): Gradient of the maximised objective at state.x
        algo (str, optional): Algorithm id, defaults to state.algo

    Returns:
        FirstOrderState: New state; the input is not modified

    Raises:
        NonFiniteGradient: If grad has nan or inf entries
    """
    algo = algo or state.algo
    g = np.asarray(grad, dtype=float).ravel()
    if g.shape != state.x.shape:
        raise ValueError(f"gradient has shape {g.shape}, iterate has {state.x.shape}")
    if not np.all(np.isfinite(g)):
        raise NonFiniteGradient(f"{algo} received a non-finite gradient at step {state.t + 1}")
    p = state.params
    t = state.t + 1
    x, m1, m2, aux, prev = state.x, state.m1, state.m2, state.aux, state.prev_grad
    delta = 1.0
    if p.get("weight_decay", 0.0) and algo != "adamw":
        g = g - p["weight_decay"] * x

    if algo == "sga":
        lr = scheduled_lr(p, t)
        m1 = g.copy() if t == 1 else p["momentum"] * m1 + (1.0 - p["dampening"]) * g
        direction = g + p["momentum"] * m1 if p["nesterov"] else m1
        step = lr * direction
    elif algo == "adagrad":
        m2 = m2 + g ** 2
        lr = p["lr"] / (1.0 + (t - 1) * p["lr_decay"])
        step = lr * _safe_ratio(g, np.sqrt(m2) + p["eps"])
    elif algo == "rmsprop":
        lr = scheduled_lr(p, t)
        # alpha is the smoothing constant: the weight kept on the old average
        alpha = p["alpha"]
        m2 = alpha * m2 + (1.0 - alpha) * g ** 2
        avg = m2
        if p["centered"]:
            aux = alpha * aux + (1.0 - alpha) * g
            avg = np.maximum(m2 - aux ** 2, 0.0)
        scaled = _safe_ratio(g, np.sqrt(avg) + p["eps"])
        if p["momentum"] > 0:
            m1 = p["momentum"] * m1 + scaled
            step = lr * m1
        else:
            step = lr * scaled
    elif algo in ("adam", "adamw"):
        lr = scheduled_lr(p, t)
        m1, m2 = adam_moments(m1, m2, g, p["beta1"], p["beta2"])
        m_hat = m1 / (1.0 - p["beta1"] ** t)
        v_hat = m2 / (1.0 - p["beta2"] ** t)
        step = lr * _safe_ratio(m_hat, np.sqrt(v_hat) + p["eps"])
        if algo == "adamw":
            delta = 1.0 - p["weight_decay"] * lr
    elif algo == "adadelta":
        lr = scheduled_lr(p, t)
        rho, eps = p["rho"], p["eps"]
        m2 = rho * m2 + (1.0 - rho) * g ** 2
        update = np.sqrt(aux + eps) / np.sqrt(m2 + eps) * g
        aux = rho * aux + (1.0 - rho) * update ** 2
        step = lr * update
    elif algo == "rprop":
        sign_change = g * prev
        aux = np.where(sign_change > 0, np.minimum(aux * p["eta_plus"], p["step_max"]), aux)
        aux = np.where(sign_change < 0, np.maximum(aux * p["eta_minus"], p["step_min"]), aux)
        step = p.get("gamma", 1.0) ** (t - 1) * aux * np.sign(g)
    elif algo == "adamos":
        beta1_t, beta2_t, eta_t = cadam_schedule(t, p)
        m1 = beta1_t * m1 + (1.0 - beta1_t) * g
        m2 = beta2_t * m2 + (1.0 - beta2_t) * g ** 2
        step = eta_t * _safe_ratio(m1, np.sqrt(m2) + p["eps"])
    else:
        raise ConfigError(f"Unknown first-order algorithm: {algo}")

    x_new = clip_unit(delta * x + step)
    return replace(state, x=x_new, m1=m1, m2=m2, aux=aux, prev_grad=g, t=t, algo=algo)


def run_first_order(model, spec, x0_batches, algo, t_steps, minibatch, rng, pool=None,
                    params=None, selection_samples=config.ERM_SELECTION_SAMPLES):
    """
    Maximise an FSM or ERM acquisition from several restarts

    Args:
        model (GpModel): Surrogate
        spec (AcquisitionSpec): Acquisition with form FSM or ERM
        x0_batches (list): Restart q x d batches
        algo (str): First-order algorithm id
        t_steps (int): Steps per restart
        minibatch (int): Draws per gradient
        rng (np.random.Generator): Caller-owned generator
        pool (SamplePool, optional): Pool, required for the FSM form
        params (dict, optional): Hyperparameter overrides
        selection_samples (int): Fresh draws used to rank ERM restarts

    Returns:
        MaximisationResult: Best final batch and its value
    """
    if spec.form == "FSM" and pool is None:
        raise ValueError("FSM form needs a sample pool")
    q, d = np.asarray(x0_batches[0]).shape

    def optimise_one(k, x0):
        state = FirstOrderState.start(x0, algo, params)
        for _ in range(t_steps):
            xq = state.x.reshape(q, d)
            if spec.form == "FSM":
                columns = sample_indices(rng, pool.m, minibatch)
                gradient = grad_fsm(spec.kind, model, xq, pool.z[columns], spec)
            else:
                gradient = grad_erm(spec.kind, model, xq, minibatch, rng, spec)
            state = general_step(state, gradient.g)
        return state.x.reshape(q, d)

    score = selection_scorer(model, spec, pool, rng, selection_samples, q)
    return run_restarts(x0_batches, optimise_one, score)
