#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Exception types

Every error raised on purpose by the toolkit derives from BenchError.
Errors that describe a bad value also derive from ValueError.
"""


class BenchError(Exception):
    """Base class for toolkit errors"""


class NotPositiveDefinite(BenchError, ValueError):
    """A matrix could not be factorised at any jitter level"""


class DimensionMismatch(BenchError, ValueError):
    """Operand shapes do not agree"""


class IndexOutOfRange(BenchError, IndexError):
    """A sample column index lies outside the pool"""


class NonFiniteGradient(BenchError, ValueError):
    """An optimiser received a gradient containing nan or inf"""


class NonFiniteState(BenchError, ArithmeticError):
    """An optimiser state became non-finite"""


class LineSearchFailed(BenchError, ArithmeticError):
    """Backtracking exhausted its halvings without an Armijo step"""


class FitFailed(BenchError):
    """Every GP fitting restart failed to factorise"""


class OutOfDomain(BenchError, ValueError):
    """A point lies outside the task's box"""


class ConfigError(BenchError, ValueError):
    """An experiment configuration is invalid or references unknown ids"""


class BenchIOError(BenchError, OSError):
    """Results could not be written or read"""
