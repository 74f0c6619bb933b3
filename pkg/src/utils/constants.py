#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Benchmark Constants Definition File

Identifiers shared by the acquisition functions, the optimisers and the
runner.
"""

# Acquisition kinds
ACQUISITION_KINDS = {
    "EI": "Expected improvement",
    "PI": "Probability of improvement (sigmoid relaxation)",
    "SR": "Simple regret",
    "UCB": "Upper confidence bound",
}

# Acquisition forms
ACQUISITION_FORMS = {
    "ERM": "Fresh samples at every optimiser iteration",
    "FSM": "Finite sum over a fixed sample pool",
    "COMP": "Compositional rewrite of the finite sum",
    "COMP_ME": "Memory-efficient compositional, fresh K draws per step",
}

# Optimiser families
FAMILY_ZERO = "zero"
FAMILY_FIRST = "first"
FAMILY_COMP = "comp"
FAMILY_SECOND = "second"

_NON_COMP_FORMS = ("ERM", "FSM")
_ZERO_FORMS = ("ERM", "FSM", "COMP")

# Optimiser registry: id -> (display name, family, supported forms)
OPTIMISERS = {
    "rs": ("Random search", FAMILY_ZERO, _ZERO_FORMS),
    "cmaes": ("CMA-ES", FAMILY_ZERO, _ZERO_FORMS),
    "de": ("Differential evolution", FAMILY_ZERO, _ZERO_FORMS),
    "sga": ("Stochastic gradient ascent", FAMILY_FIRST, _NON_COMP_FORMS),
    "adagrad": ("AdaGrad", FAMILY_FIRST, _NON_COMP_FORMS),
    "rmsprop": ("RMSprop", FAMILY_FIRST, _NON_COMP_FORMS),
    "adam": ("Adam", FAMILY_FIRST, _NON_COMP_FORMS),
    "adadelta": ("AdaDelta", FAMILY_FIRST, _NON_COMP_FORMS),
    "rprop": ("RProp", FAMILY_FIRST, _NON_COMP_FORMS),
    "adamw": ("AdamW", FAMILY_FIRST, _NON_COMP_FORMS),
    "adamos": ("AdamOS", FAMILY_FIRST, _NON_COMP_FORMS),
    "lbfgs": ("L-BFGS", FAMILY_SECOND, _NON_COMP_FORMS),
    "scga": ("SCGA", FAMILY_COMP, ("COMP",)),
    "ascga": ("ASCGA", FAMILY_COMP, ("COMP",)),
    "cadam": ("CAdam", FAMILY_COMP, ("COMP", "COMP_ME")),
    "nasa": ("NASA", FAMILY_COMP, ("COMP", "COMP_ME")),
    "nested_mc": ("Nested-MC", FAMILY_COMP, ("COMP", "COMP_ME")),
    "clbfgs": ("CL-BFGS", FAMILY_SECOND, ("COMP",)),
}

# Non-compositional optimiser -> compositional counterpart
COMPOSITIONAL_COUNTERPARTS = {
    "sga": "scga",
    "adam": "cadam",
    "adamos": "cadam",
    "lbfgs": "clbfgs",
}

# Benchmark tasks
TASK_NAMES = ("levy", "ackley", "powell", "dixon_price", "styblinski_tang")

# Result files
CSV_HEADER = [
    "tuple_id", "task", "dim", "acq", "form", "optimizer", "seed",
    "step", "incumbent", "regret", "opt_ms", "fit_ms", "status",
]
STATUS_OK = "ok"
