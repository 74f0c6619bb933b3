#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Helper functions module

Logging setup, seed derivation, box clipping and timing helpers shared by
the whole toolkit.
"""

import hashlib
import inspect
import logging
import os
import time
from contextlib import contextmanager

import numpy as np

import config

logger = logging.getLogger("src")


def setup_logging(debug=None):
    """
    Configure the package logger

    Args:
        debug (bool, optional): Enable DEBUG level. Defaults to config.DEBUG_MODE

    Returns:
        logging.Logger: The package root logger
    """
    if debug is None:
        debug = config.DEBUG_MODE
    root = logging.getLogger("src")
    if not root.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(config.LOG_FORMAT))
        root.addHandler(handler)
    root.setLevel(logging.DEBUG if debug else logging.INFO)
    return root


def debug_log(message):
    """
    Log a debug message tagged with the caller's file and line

    Args:
        message (str): Debug message
    """
    if not logger.isEnabledFor(logging.DEBUG):
        return
    caller_frame = inspect.currentframe().f_back
    caller_info = f"{os.path.basename(caller_frame.f_code.co_filename)}:{caller_frame.f_lineno}"
    logger.debug("%s - %s", caller_info, message)


def derive_seed(*parts):
    """
    Derive a 63-bit seed from arbitrary identifying parts

    The same parts always give the same seed, on every platform and in
    every process.

    Args:
        *parts: Values whose string forms identify the stream

    Returns:
        int: Non-negative seed
    """
    key = "/".join(str(p) for p in parts).encode("utf-8")
    digest = hashlib.sha256(key).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def make_rng(*parts):
    """Return a numpy Generator seeded from derive_seed(*parts)"""
    return np.random.default_rng(derive_seed(*parts))


def clip_unit(x):
    """
    Project onto the unit box

    Args:
        x (np.ndarray): Any array

    Returns:
        np.ndarray: Copy of x clipped to [0, 1]
    """
    return np.clip(x, 0.0, 1.0)


@contextmanager
def stopwatch():
    """
    Measure wall time of a block in milliseconds

    Yields:
        dict: Holder whose "ms" entry is filled when the block exits
    """
    holder = {"ms": 0.0}
    start = time.perf_counter()
    try:
        yield holder
    finally:
        holder["ms"] = (time.perf_counter() - start) * 1000.0


def format_regret(value):
    """
    Format a float so that parsing it back gives the same float

    Args:
        value (float): Value to format

    Returns:
        str: Shortest round-trip representation
    """
    return repr(float(value))
